#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "simicd/icd.hpp"

using namespace simicd;

namespace {

struct Feed {
    IcdLogic icd;
    EventLog log;
    double t = 0.0;
    std::vector<TherapyOrder> orders;

    explicit Feed(IcdParams p = IcdParams{}) : icd(std::move(p)) {}

    // advance by one period and deliver the beat; suspended beats vanish
    // inside the device just like in flight
    void beat(double period, double vtc = 0.1) {
        t += period;
        if (auto o = icd.on_beat(t, vtc, log)) orders.push_back(*o);
    }
    void beats(int n, double period, double vtc = 0.1) {
        for (int i = 0; i < n; ++i) beat(period, vtc);
    }
    // jump past the blind window, then resume beating
    void skip_to_resume(double period) {
        while (t < icd.resume_t_ms()) t += period;
    }
    int events(const char* type) const {
        return static_cast<int>(events_of_type(log, type).size());
    }
};

}  // namespace

TEST_CASE("sinus rhythm never arms the device") {
    Feed f;
    f.beats(30, 800.0, 0.98);
    CHECK(f.orders.empty());
    CHECK(!f.icd.done());
    CHECK(f.events("zone_entry") == 0);
    CHECK(f.events("therapy") == 0);
}

TEST_CASE("VT walks burst, ramp, shock, then termination") {
    Feed f;

    // 330 ms rhythm: anchor + 10 to warm, 8 accumulating beats to 2640 ms
    f.beats(18, 330.0);
    CHECK(f.orders.empty());
    f.beat(330.0);
    REQUIRE(f.orders.size() == 1);
    const auto& o1 = f.orders[0];
    CHECK(o1.decision.kind == TherapyKind::ATP);
    CHECK(o1.decision.zone == ZoneId::VT);  // severity above VT1 on the same beat
    REQUIRE(o1.scheme.has_value());
    CHECK(*o1.scheme == AtpScheme::Burst);
    CHECK(o1.pulses.pulse_times_ms.size() == 8);
    CHECK(o1.pulses.pulse_times_ms[0] == doctest::Approx(f.t + 0.81 * 330.0));
    CHECK(o1.resume_t_ms == doctest::Approx(o1.pulses.pulse_times_ms.back() + 4.0 + 250.0));
    CHECK(f.events("sustained") == 1);
    CHECK(f.events("zone_entry") == 2);  // VT1 and VT

    // beats inside the blind window are discarded
    const auto pending = f.orders.size();
    f.beats(3, 100.0);
    CHECK(f.orders.size() == pending);

    // rhythm unchanged: re-detection at the shorter duration gives a ramp
    f.skip_to_resume(330.0);
    f.beats(14, 330.0);
    CHECK(f.orders.size() == 1);
    f.beat(330.0);
    REQUIRE(f.orders.size() == 2);
    CHECK(*f.orders[1].scheme == AtpScheme::Ramp);

    // still unchanged: attempts spent, shock after the charge delay
    f.skip_to_resume(330.0);
    f.beats(15, 330.0);
    REQUIRE(f.orders.size() == 3);
    const auto& o3 = f.orders[2];
    CHECK(o3.decision.kind == TherapyKind::Shock);
    CHECK(o3.shock.onset_ms == doctest::Approx(f.t + 2000.0));
    CHECK(f.icd.shocks_delivered() == 1);
    CHECK(f.icd.therapies_delivered() == 3);

    // slow rhythm after the shock: ten consecutive slow periods close it out
    f.skip_to_resume(800.0);
    f.beats(10, 800.0);
    CHECK(!f.icd.terminated());
    f.beat(800.0);
    CHECK(f.icd.terminated());
    CHECK(f.icd.done());
    CHECK(f.events("termination") == 1);
    CHECK(f.icd.terminated_t_ms() == doctest::Approx(f.t));
}

TEST_CASE("the single allowed shock is never repeated") {
    Feed f;
    f.beats(20, 330.0);               // burst
    f.skip_to_resume(330.0);
    f.beats(15, 330.0);               // ramp
    f.skip_to_resume(330.0);
    f.beats(15, 330.0);               // shock
    REQUIRE(f.orders.size() == 3);

    // VT persists: the device gives up instead of shocking again
    f.skip_to_resume(330.0);
    f.beats(25, 330.0);
    CHECK(f.orders.size() == 3);
    CHECK(f.icd.exhausted());
    CHECK(f.icd.done());
    CHECK(f.events("exhausted") == 1);
    CHECK(f.icd.shocks_delivered() == 1);

    // once done, further beats are ignored entirely
    const auto log_size = f.log.size();
    f.beats(10, 330.0);
    CHECK(f.log.size() == log_size);
}

TEST_CASE("correlated slow tachycardia is inhibited, not treated") {
    Feed f;
    f.beats(40, 400.0, 0.97);  // VT1-zone rate, NSR-like morphology
    CHECK(f.orders.empty());
    CHECK(f.icd.inhibit_seen());
    CHECK(!f.icd.done());
    CHECK(f.events("sustained") == 1);   // latched once, not per beat
    CHECK(f.events("therapy") == 1);     // the logged inhibit decision
    CHECK(f.icd.therapies_delivered() == 0);
}

TEST_CASE("loss of correlation mid-episode releases the inhibit") {
    Feed f;
    f.beats(25, 400.0, 0.97);
    CHECK(f.orders.empty());
    // morphology degenerates: scores drop, therapy follows once the window
    // has fewer than four correlated beats
    f.beats(12, 400.0, 0.1);
    CHECK(f.orders.size() == 1);
    CHECK(f.orders[0].decision.zone == ZoneId::VT1);
    CHECK(*f.orders[0].scheme == AtpScheme::Burst);
}

TEST_CASE("VF1 gets quick convert then shock") {
    Feed f;
    // 280 ms: inside VF1 (<300); duration 1000 ms -> 4 accumulating beats
    f.beats(15, 280.0);
    REQUIRE(!f.orders.empty());
    const auto& o = f.orders[0];
    CHECK(o.decision.kind == TherapyKind::QCATP);
    REQUIRE(o.scheme.has_value());
    CHECK(*o.scheme == AtpScheme::QC);
    f.skip_to_resume(280.0);
    f.beats(15, 280.0);
    REQUIRE(f.orders.size() == 2);
    CHECK(f.orders[1].decision.kind == TherapyKind::Shock);
}

TEST_CASE("VF rate goes straight to shock") {
    Feed f;
    f.beats(16, 200.0);
    REQUIRE(!f.orders.empty());
    CHECK(f.orders[0].decision.kind == TherapyKind::Shock);
    CHECK(f.icd.shocks_delivered() == 1);
}

TEST_CASE("batch termination rule") {
    IcdParams p;
    std::vector<double> slow(10, 500.0);
    CHECK(classify_termination(slow, p));

    std::vector<double> nine(9, 500.0);
    CHECK(!classify_termination(nine, p));

    // a single fast beat restarts the slow count
    std::vector<double> broken = {500, 500, 500, 500, 300};
    broken.insert(broken.end(), 9, 500.0);
    CHECK(!classify_termination(broken, p));
    broken.push_back(500.0);  // tenth consecutive slow beat
    CHECK(classify_termination(broken, p));

    // sustained re-detection before ten slow beats
    std::vector<double> redetect;
    for (int i = 0; i < 30; ++i) redetect.push_back(330.0);
    CHECK(!classify_termination(redetect, p));

    // too slow to conclude inside the observation window
    std::vector<double> late = {6000.0, 6000.0, 500, 500, 500, 500, 500, 500, 500, 500, 500, 500};
    CHECK(!classify_termination(late, p));
}

TEST_CASE("device parameter validation") {
    IcdParams p;
    p.max_shocks = 0;
    CHECK_THROWS(IcdLogic{p});
    p = IcdParams{};
    p.post_therapy_blank_ms = -1.0;
    CHECK_THROWS(IcdLogic{p});
}
