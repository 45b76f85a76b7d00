#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "flashfx/classify.hpp"
#include "flashfx/detect.hpp"
#include "flashfx/fleetliq.hpp"

namespace flashfx {

// Normalizes "2008-10-07" or "2008-10" to "2008-10". Throws InvalidConfig.
std::string month_label(std::string_view date);

// Descriptive statistics by session column plus a Total column.
std::string format_table1(std::span<const CrashEvent> crashes, std::span<const CrashClassification> kinds);

// Fleeting liquidity counts by session and the logit estimates, or the note
// explaining why no model is available.
std::string format_table2(std::span<const CrashEvent> crashes, std::span<const std::optional<bool>> fleeting,
                          const std::optional<LogitModel>& model, std::string_view note);

// "term,coef,std_err,z,stars,included"
std::string format_logit_csv(const std::optional<LogitModel>& model);

// One feature row per crash; FleetLiq left empty when unlabeled.
std::string format_fleetliq_csv(std::span<const CrashEvent> crashes, std::span<const CrashClassification> kinds,
                                std::span<const std::optional<bool>> fleeting);

std::string format_crashes_csv(std::span<const CrashEvent> crashes);
std::string format_classified_csv(std::span<const CrashEvent> crashes, std::span<const CrashClassification> kinds);

void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace flashfx
