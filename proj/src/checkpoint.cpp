#include "simicd/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "simicd/errors.hpp"

namespace simicd {

namespace {

constexpr std::uint32_t kMagic = 0x44434953;  // "SICD"

template <typename T>
void put(std::ofstream& f, const T& v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& f, const std::string& path) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw SimulationError("truncated checkpoint file: " + path);
    return v;
}

}  // namespace

Checkpoint make_checkpoint(const Tissue& tissue, std::uint64_t config_hash) {
    Checkpoint cp;
    cp.config_hash = config_hash;
    cp.t_ms = tissue.state().t_ms;
    cp.step_count = tissue.state().step_count;
    cp.nx = static_cast<std::uint32_t>(tissue.grid().nx);
    cp.ny = static_cast<std::uint32_t>(tissue.grid().ny);
    cp.vm = tissue.state().vm;
    cp.h = tissue.state().h;
    return cp;
}

void restore_checkpoint(Tissue& tissue, const Checkpoint& cp, std::uint64_t expected_hash) {
    if (cp.config_hash != expected_hash)
        throw SimulationError("checkpoint belongs to a different configuration");
    if (cp.nx != static_cast<std::uint32_t>(tissue.grid().nx) ||
        cp.ny != static_cast<std::uint32_t>(tissue.grid().ny))
        throw SimulationError("checkpoint grid dimensions do not match");
    TissueState s;
    s.t_ms = cp.t_ms;
    s.step_count = cp.step_count;
    s.vm = cp.vm;
    s.h = cp.h;
    tissue.set_state(std::move(s));
}

void save_checkpoint(const Checkpoint& cp, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw SimulationError("cannot write checkpoint: " + path);
    put(f, kMagic);
    put(f, cp.version);
    put(f, cp.config_hash);
    put(f, cp.t_ms);
    put(f, cp.step_count);
    put(f, cp.nx);
    put(f, cp.ny);
    f.write(reinterpret_cast<const char*>(cp.vm.data()), cp.vm.size() * sizeof(double));
    f.write(reinterpret_cast<const char*>(cp.h.data()), cp.h.size() * sizeof(double));
    if (!f) throw SimulationError("short write on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw SimulationError("cannot open checkpoint: " + path);
    if (get<std::uint32_t>(f, path) != kMagic)
        throw SimulationError("not a checkpoint file: " + path);
    Checkpoint cp;
    cp.version = get<std::uint32_t>(f, path);
    if (cp.version != 1)
        throw SimulationError("unsupported checkpoint version " + std::to_string(cp.version));
    cp.config_hash = get<std::uint64_t>(f, path);
    cp.t_ms = get<double>(f, path);
    cp.step_count = get<std::int64_t>(f, path);
    cp.nx = get<std::uint32_t>(f, path);
    cp.ny = get<std::uint32_t>(f, path);
    const size_t n = static_cast<size_t>(cp.nx) * cp.ny;
    cp.vm.resize(n);
    cp.h.resize(n);
    f.read(reinterpret_cast<char*>(cp.vm.data()), n * sizeof(double));
    f.read(reinterpret_cast<char*>(cp.h.data()), n * sizeof(double));
    if (!f) throw SimulationError("truncated checkpoint file: " + path);
    return cp;
}

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

}  // namespace simicd
