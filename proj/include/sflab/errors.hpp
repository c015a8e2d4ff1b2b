#pragma once

#include <stdexcept>
#include <string>

namespace sflab {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Vector not in the span of the frame at the given point.
struct NotHorizontal : Error {
  explicit NotHorizontal(const std::string& msg) : Error("NotHorizontal: " + msg) {}
};

// Bracket generation did not reach full rank within the depth cap.
struct HoermanderUndecided : Error {
  explicit HoermanderUndecided(const std::string& msg) : Error("HoermanderUndecided: " + msg) {}
};

// Candidate chart failed the coordinate-order certification.
struct NotPrivileged : Error {
  explicit NotPrivileged(const std::string& msg) : Error("NotPrivileged: " + msg) {}
};

// Rescaled fields have terms of weighted degree below -1, no nilpotent limit.
struct NotApproximable : Error {
  explicit NotApproximable(const std::string& msg) : Error("NotApproximable: " + msg) {}
};

struct StepMismatch : Error {
  explicit StepMismatch(const std::string& msg) : Error("StepMismatch: " + msg) {}
};

struct OutOfChart : Error {
  explicit OutOfChart(const std::string& msg) : Error("OutOfChart: " + msg) {}
};

struct NoConvergence : Error {
  explicit NoConvergence(const std::string& msg) : Error("NoConvergence: " + msg) {}
};

struct InvalidCurve : Error {
  explicit InvalidCurve(const std::string& msg) : Error("InvalidCurve: " + msg) {}
};

struct InvalidMeasure : Error {
  explicit InvalidMeasure(const std::string& msg) : Error("InvalidMeasure: " + msg) {}
};

}  // namespace sflab
