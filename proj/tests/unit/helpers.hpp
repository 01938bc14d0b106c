#pragma once

#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "vibronic_td/errors.hpp"

namespace test {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Collects warnings for the lifetime of the guard.
struct WarningCapture {
  std::vector<std::string> messages;
  vibronic_td::WarningHandler previous;
  WarningCapture() {
    previous = vibronic_td::set_warning_handler([this](std::string_view m) { messages.emplace_back(m); });
  }
  ~WarningCapture() { vibronic_td::set_warning_handler(previous); }
  bool contains(std::string_view needle) const {
    for (const auto& m : messages) {
      if (m.find(needle) != std::string::npos) return true;
    }
    return false;
  }
};

}  // namespace test
