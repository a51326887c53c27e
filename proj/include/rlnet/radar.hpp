#pragma once

#include "rlnet/common.hpp"
#include "rlnet/dataset.hpp"
#include "rlnet/fft.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace rlnet {

inline constexpr double kSpeedOfLight = 2.998e8;

struct RadarConfig {
  double carrier_hz = 60e9;
  double bandwidth_hz = 1e9;
  double chirp_time_s = 500e-6;
  std::size_t chirps = 32;
  std::size_t samples = 64;
  std::size_t frames = 100;
  double frame_rate_hz = 33.0;
  /// Complex noise power per sample (E|n|^2).
  double noise_power = 0.01;
  /// Echo amplitude of a target at 1 m; scales as 1/R^2.
  double reference_amplitude = 0.09;
  /// Detection threshold: max(kappa * median, peak_fraction * max) of the MTI profile.
  double detection_kappa = 6.0;
  double detection_peak_fraction = 0.1;

  static constexpr std::size_t antennas = 3;

  double wavelength() const { return kSpeedOfLight / carrier_hz; }
  double antenna_spacing() const { return wavelength() / 2.0; }
  double sample_rate() const { return static_cast<double>(samples) / chirp_time_s; }
  double range_resolution() const { return kSpeedOfLight / (2.0 * bandwidth_hz); }
  double velocity_resolution() const { return wavelength() / (2.0 * static_cast<double>(chirps) * chirp_time_s); }
  double max_velocity() const { return wavelength() / (4.0 * chirp_time_s); }
  std::size_t range_bins() const { return samples / 2; }
  double max_range() const { return range_resolution() * static_cast<double>(range_bins()); }

  /// Throws ConfigError.
  void validate() const;
};

/// Complex samples laid out [frame][antenna][chirp][sample].
class RadarCube {
 public:
  RadarCube() = default;
  explicit RadarCube(const RadarConfig& config);

  std::size_t frames() const { return frames_; }
  std::size_t chirps() const { return chirps_; }
  std::size_t samples() const { return samples_; }

  Complex& at(std::size_t f, std::size_t a, std::size_t c, std::size_t n) { return data_[index(f, a, c, n)]; }
  const Complex& at(std::size_t f, std::size_t a, std::size_t c, std::size_t n) const { return data_[index(f, a, c, n)]; }
  std::span<Complex> chirp(std::size_t f, std::size_t a, std::size_t c) {
    return {data_.data() + index(f, a, c, 0), samples_};
  }
  std::span<const Complex> chirp(std::size_t f, std::size_t a, std::size_t c) const {
    return {data_.data() + index(f, a, c, 0), samples_};
  }
  const std::vector<Complex>& data() const { return data_; }

 private:
  std::size_t index(std::size_t f, std::size_t a, std::size_t c, std::size_t n) const {
    return ((f * RadarConfig::antennas + a) * chirps_ + c) * samples_ + n;
  }

  std::size_t frames_ = 0, chirps_ = 0, samples_ = 0;
  std::vector<Complex> data_;
};

enum class Gesture { SwipeLeft, SwipeRight, SwipeUp, SwipeDown, Push };
inline constexpr std::size_t kNumGestures = 5;

/// Radial kinematics of the hand at the start of a frame. Angles in radians;
/// negative velocity means approaching.
struct TargetState {
  double range = 0.0;
  double velocity = 0.0;
  double azimuth = 0.0;
  double elevation = 0.0;
  double amplitude = 0.0;
};

struct GestureTrajectory {
  Gesture gesture = Gesture::Push;
  std::vector<std::array<double, 3>> position;  // x (azimuth axis), y (elevation axis), z (boresight)
  std::vector<TargetState> states;
};

/// Same state in every frame.
GestureTrajectory constant_trajectory(const RadarConfig& config, const TargetState& state);

/// Hand position (m) as a function of time (s).
using HandPath = std::function<std::array<double, 3>(double)>;

/// Samples `path` at each frame start; radial velocity by a 0.1 ms central difference.
GestureTrajectory trajectory_from_path(const RadarConfig& config, Gesture gesture, const HandPath& path);

/// Throws DataError if any frame leaves the unambiguous range/velocity region.
void check_trajectory(const GestureTrajectory& trajectory, const RadarConfig& config);

RadarCube synthesize_cube(const GestureTrajectory& trajectory, const RadarConfig& config, std::uint64_t seed);

/// Range profiles of one frame, [antenna][chirp][bin] with range_bins() bins each.
struct RangeProfiles {
  std::size_t chirps = 0;
  std::size_t bins = 0;
  std::vector<Complex> data;

  Complex& at(std::size_t a, std::size_t c, std::size_t k) { return data[(a * chirps + c) * bins + k]; }
  const Complex& at(std::size_t a, std::size_t c, std::size_t k) const { return data[(a * chirps + c) * bins + k]; }
};

/// DC removal, Hann window and unitary FFT of one chirp; returns the positive half.
std::vector<Complex> range_profile(std::span<const Complex> chirp);
RangeProfiles range_fft(const RadarCube& cube, std::size_t frame);

/// Frame-to-frame canceller: out[f] = in[f] - in[f-1]; the first frame is zero.
std::vector<RangeProfiles> mti_filter(const std::vector<RangeProfiles>& profiles);

/// Mean magnitude over antennas and chirps, per bin.
std::vector<double> magnitude_profile(const RangeProfiles& profiles);

struct Detection {
  std::size_t bin = 0;
  double magnitude = 0.0;
};

/// Closest local maximum above max(kappa * median, peak_fraction * max). Bin 0 (DC) is skipped.
std::optional<Detection> localize_target(std::span<const double> profile, double kappa, double peak_fraction = 0.0);

struct DopplerEstimate {
  int bin = 0;  // signed, after fftshift
  double velocity = 0.0;
  double magnitude = 0.0;
};

/// Windowed FFT over chirps at one range bin.
std::vector<Complex> doppler_spectrum(const RangeProfiles& profiles, std::size_t antenna, std::size_t bin);
DopplerEstimate doppler_fft(const RangeProfiles& profiles, std::size_t antenna, std::size_t bin,
                            const RadarConfig& config);

struct AngleEstimate {
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;
  bool clamped = false;
};

/// Phase-comparison monopulse at a range-Doppler cell.
AngleEstimate estimate_angles(const RangeProfiles& profiles, std::size_t bin, int doppler_bin,
                              const RadarConfig& config);

struct FrameFeatures {
  bool detected = false;
  double range = 0.0;
  double doppler = 0.0;
  double azimuth = 0.0;
  double elevation = 0.0;
  double magnitude = 0.0;
  std::size_t range_bin = 0;
  int doppler_bin = 0;
  bool angle_clamped = false;

  std::array<double, 5> values() const { return {range, doppler, azimuth, elevation, magnitude}; }
};

std::vector<FrameFeatures> extract_features(const RadarCube& cube, const RadarConfig& config);

inline constexpr std::size_t kGestureWindow = 10;
inline constexpr int kBackgroundLabel = -1;

struct GestureSample {
  std::array<double, 5> features{};
  int label = 0;
  std::size_t anchor = 0;
  std::size_t window_start = 0;
  std::vector<int> frame_labels;  // gesture label inside the window, kBackgroundLabel elsewhere
};

struct WindowOutcome {
  std::optional<GestureSample> sample;
  std::string rejection;
};

/// Anchor = detected frame of minimum range (earliest on ties); window anchor-5 .. anchor+4
/// clamped into the recording; features averaged over detected frames of the window.
WindowOutcome label_and_window(const std::vector<FrameFeatures>& frames, int label);

/// Per-user behavioural offsets.
struct UserProfile {
  double speed = 1.0;
  double extent = 1.0;
  double swipe_distance = 0.30;  // closest approach of a swipe (m)
  double push_distance = 0.17;   // closest approach of a push (m)
  double height = 0.0;           // y offset (m)
  double lateral = 0.0;          // x offset (m)
  double asymmetry = 0.77;       // closest point along a swipe, as a fraction of its half-extent
  double retract_ratio = 2.7;    // push retraction time / approach time
};

UserProfile draw_user_profile(std::mt19937_64& rng);

/// A deterministic distribution shift for a held-out user.
struct UserShift {
  double speed_scale = 1.0;
  double extent_scale = 1.0;
  double distance_offset = 0.0;
  double height_offset = 0.0;
  double asymmetry_scale = 1.0;

  static UserShift held_out();
  UserProfile apply(UserProfile p) const;
};

/// Hand trajectory for one recording with per-sample jitter drawn from rng.
GestureTrajectory make_gesture(Gesture gesture, const UserProfile& user, const RadarConfig& config,
                               std::mt19937_64& rng);

struct DatasetOptions {
  std::size_t users = 2;
  std::size_t samples_per_class = 20;
  std::size_t first_user = 0;
  std::uint64_t seed = 0;
  std::optional<UserShift> shift;
  /// Redraws allowed per sample when windowing rejects a recording.
  std::size_t max_attempts = 5;
};

struct DatasetReport {
  FeatureTable table;
  std::vector<std::string> rejections;
};

/// Seed for recording (user, class, sample, attempt) derived from the master seed.
std::uint64_t recording_seed(std::uint64_t master, std::size_t user, std::size_t cls, std::size_t sample,
                             std::size_t attempt);

DatasetReport generate_dataset(const DatasetOptions& options, const RadarConfig& config);

/// Flat little-endian dump: magic, shape, config hash, then (re, im) float64 pairs.
void write_cube(std::ostream& out, const RadarCube& cube, const std::string& config_hash);

}  // namespace rlnet
