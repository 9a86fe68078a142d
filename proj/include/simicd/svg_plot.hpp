#pragma once

#include <string>

#include "simicd/detection.hpp"
#include "simicd/egm.hpp"
#include "simicd/events.hpp"
#include "simicd/reentry.hpp"
#include "simicd/tissue.hpp"

namespace simicd {

/// Two stacked channel panels with therapy / zone-entry markers overlaid.
std::string plot_egm_svg(const EgmTrace& trace, const EventLog& events);

/// Beat-to-beat interval scatter from the sense events, with the zone
/// thresholds drawn as horizontal guides.
std::string plot_periods_svg(const EventLog& events, const DetectionParams& det);

/// First-activation heatmap of the sheet (scar in gray, unreached in black).
std::string plot_activation_svg(const ActivationMap& map, const TissueGrid& grid);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace simicd
