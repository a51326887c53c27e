#include "rlnet/radar.hpp"

#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>
#include <ostream>

namespace rlnet {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kRadToDeg = 180.0 / kPi;

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double normal(std::mt19937_64& rng, double sd) { return std::normal_distribution<double>(0.0, sd)(rng); }

double norm3(const std::array<double, 3>& p) { return std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]); }

double clamp_unit(double v, bool& clamped) {
  if (v > 1.0 || v < -1.0) {
    clamped = true;
    return std::clamp(v, -1.0, 1.0);
  }
  return v;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

// Sub-bin peak offset from a parabola through three magnitudes.
double parabolic_offset(double left, double centre, double right) {
  const double denom = left - 2.0 * centre + right;
  if (denom >= 0.0) return 0.0;
  return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

}  // namespace

void RadarConfig::validate() const {
  if (!(carrier_hz > 0.0)) throw ConfigError("radar: carrier frequency must be positive");
  if (!(bandwidth_hz > 0.0)) throw ConfigError("radar: bandwidth must be positive");
  if (!(chirp_time_s > 0.0)) throw ConfigError("radar: chirp time must be positive");
  if (chirps < 2) throw ConfigError("radar: need at least 2 chirps per frame");
  if (samples < 4 || samples % 2 != 0) throw ConfigError("radar: samples per chirp must be even and >= 4");
  if (frames < kGestureWindow) throw ConfigError("radar: fewer frames than the gesture window");
  if (!(frame_rate_hz > 0.0)) throw ConfigError("radar: frame rate must be positive");
  if (static_cast<double>(chirps) * chirp_time_s * frame_rate_hz > 1.0) {
    throw ConfigError("radar: chirp train longer than the frame period");
  }
  if (!(noise_power >= 0.0)) throw ConfigError("radar: noise power must be non-negative");
  if (!(reference_amplitude > 0.0)) throw ConfigError("radar: reference amplitude must be positive");
  if (!(detection_kappa > 0.0)) throw ConfigError("radar: detection kappa must be positive");
  if (!(detection_peak_fraction >= 0.0 && detection_peak_fraction < 1.0)) {
    throw ConfigError("radar: detection peak fraction must lie in [0, 1)");
  }
}

RadarCube::RadarCube(const RadarConfig& config)
    : frames_(config.frames),
      chirps_(config.chirps),
      samples_(config.samples),
      data_(config.frames * RadarConfig::antennas * config.chirps * config.samples) {}

GestureTrajectory constant_trajectory(const RadarConfig& config, const TargetState& state) {
  GestureTrajectory t;
  const double x = state.range * std::sin(state.azimuth);
  const double y = state.range * std::sin(state.elevation);
  const double z = std::sqrt(std::max(0.0, state.range * state.range - x * x - y * y));
  t.position.assign(config.frames, {x, y, z});
  t.states.assign(config.frames, state);
  return t;
}

GestureTrajectory trajectory_from_path(const RadarConfig& config, Gesture gesture, const HandPath& path) {
  constexpr double dt = 1e-4;
  GestureTrajectory t;
  t.gesture = gesture;
  t.position.reserve(config.frames);
  t.states.reserve(config.frames);
  for (std::size_t f = 0; f < config.frames; ++f) {
    const double time = static_cast<double>(f) / config.frame_rate_hz;
    const auto p = path(time);
    const double r = norm3(p);
    TargetState s;
    s.range = r;
    s.velocity = (norm3(path(time + dt)) - norm3(path(time - dt))) / (2.0 * dt);
    if (r > 0.0) {
      s.azimuth = std::asin(std::clamp(p[0] / r, -1.0, 1.0));
      s.elevation = std::asin(std::clamp(p[1] / r, -1.0, 1.0));
      s.amplitude = config.reference_amplitude / (r * r);
    }
    t.position.push_back(p);
    t.states.push_back(s);
  }
  return t;
}

void check_trajectory(const GestureTrajectory& trajectory, const RadarConfig& config) {
  if (trajectory.states.size() != config.frames) {
    throw DataError("trajectory has " + std::to_string(trajectory.states.size()) + " frames, config expects " +
                    std::to_string(config.frames));
  }
  const double vmax = config.max_velocity();
  const double rmax = config.max_range();
  for (std::size_t f = 0; f < trajectory.states.size(); ++f) {
    const auto& s = trajectory.states[f];
    if (!(s.range > 0.0) || !(s.range < rmax)) {
      throw DataError("trajectory frame " + std::to_string(f) + ": range " + std::to_string(s.range) +
                      " m outside (0, " + std::to_string(rmax) + ")");
    }
    if (!(std::abs(s.velocity) < vmax)) {
      throw DataError("trajectory frame " + std::to_string(f) + ": velocity " + std::to_string(s.velocity) +
                      " m/s exceeds the unambiguous limit " + std::to_string(vmax));
    }
  }
}

RadarCube synthesize_cube(const GestureTrajectory& trajectory, const RadarConfig& config, std::uint64_t seed) {
  config.validate();
  check_trajectory(trajectory, config);
  RadarCube cube(config);
  std::mt19937_64 rng(seed);
  boost::random::normal_distribution<double> noise(0.0, std::sqrt(config.noise_power / 2.0));

  const double lambda = config.wavelength();
  const double fs = config.sample_rate();
  const double phase_per_baseline = 2.0 * kPi * config.antenna_spacing() / lambda;
  for (std::size_t f = 0; f < config.frames; ++f) {
    const auto& s = trajectory.states[f];
    const std::array<double, RadarConfig::antennas> psi = {
        0.0, phase_per_baseline * std::sin(s.azimuth), phase_per_baseline * std::sin(s.elevation)};
    for (std::size_t a = 0; a < RadarConfig::antennas; ++a) {
      for (std::size_t c = 0; c < config.chirps; ++c) {
        const double r = s.range + s.velocity * static_cast<double>(c) * config.chirp_time_s;
        const double fb = 2.0 * config.bandwidth_hz * r / (kSpeedOfLight * config.chirp_time_s);
        const double phase0 = 4.0 * kPi * r / lambda + psi[a];
        const double step = 2.0 * kPi * fb / fs;
        auto out = cube.chirp(f, a, c);
        double zr = s.amplitude * std::cos(phase0), zi = s.amplitude * std::sin(phase0);
        const double wr = std::cos(step), wi = std::sin(step);
        for (std::size_t n = 0; n < config.samples; ++n) {
          out[n] = Complex(zr, zi);
          const double next_r = zr * wr - zi * wi;
          zi = zr * wi + zi * wr;
          zr = next_r;
        }
      }
    }
  }
  if (config.noise_power > 0.0) {
    for (std::size_t f = 0; f < config.frames; ++f) {
      for (std::size_t a = 0; a < RadarConfig::antennas; ++a) {
        for (std::size_t c = 0; c < config.chirps; ++c) {
          for (auto& v : cube.chirp(f, a, c)) {
            const double re = noise(rng);
            const double im = noise(rng);
            v += Complex(re, im);
          }
        }
      }
    }
  }
  return cube;
}

namespace {

void range_profile_into(std::span<const Complex> chirp, std::span<const double> window, std::vector<Complex>& buf) {
  const std::size_t n = chirp.size();
  Complex mean{0.0, 0.0};
  for (const auto& v : chirp) mean += v;
  mean /= static_cast<double>(n);
  buf.resize(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = (chirp[i] - mean) * window[i];
  fft_unitary(buf);
}

}  // namespace

std::vector<Complex> range_profile(std::span<const Complex> chirp) {
  std::vector<Complex> buf;
  range_profile_into(chirp, hann_window(chirp.size()), buf);
  buf.resize(chirp.size() / 2);
  return buf;
}

RangeProfiles range_fft(const RadarCube& cube, std::size_t frame) {
  if (frame >= cube.frames()) throw ShapeError("range_fft: frame out of range");
  RangeProfiles out;
  out.chirps = cube.chirps();
  out.bins = cube.samples() / 2;
  out.data.resize(RadarConfig::antennas * out.chirps * out.bins);
  const auto window = hann_window(cube.samples());
  std::vector<Complex> buf;
  for (std::size_t a = 0; a < RadarConfig::antennas; ++a) {
    for (std::size_t c = 0; c < out.chirps; ++c) {
      range_profile_into(cube.chirp(frame, a, c), window, buf);
      std::copy_n(buf.begin(), out.bins, out.data.begin() + static_cast<std::ptrdiff_t>((a * out.chirps + c) * out.bins));
    }
  }
  return out;
}

std::vector<RangeProfiles> mti_filter(const std::vector<RangeProfiles>& profiles) {
  if (profiles.size() < 2) throw DataError("mti_filter: need at least 2 frames");
  std::vector<RangeProfiles> out(profiles.size());
  out[0] = profiles[0];
  std::fill(out[0].data.begin(), out[0].data.end(), Complex{});
  for (std::size_t f = 1; f < profiles.size(); ++f) {
    const auto& cur = profiles[f];
    const auto& prev = profiles[f - 1];
    if (cur.data.size() != prev.data.size()) throw ShapeError("mti_filter: profile shapes differ");
    out[f] = cur;
    for (std::size_t i = 0; i < cur.data.size(); ++i) out[f].data[i] = cur.data[i] - prev.data[i];
  }
  return out;
}

std::vector<double> magnitude_profile(const RangeProfiles& profiles) {
  std::vector<double> out(profiles.bins, 0.0);
  const double count = static_cast<double>(RadarConfig::antennas * profiles.chirps);
  for (std::size_t a = 0; a < RadarConfig::antennas; ++a) {
    for (std::size_t c = 0; c < profiles.chirps; ++c) {
      for (std::size_t k = 0; k < profiles.bins; ++k) out[k] += std::sqrt(std::norm(profiles.at(a, c, k)));
    }
  }
  for (auto& v : out) v /= count;
  return out;
}

std::optional<Detection> localize_target(std::span<const double> profile, double kappa, double peak_fraction) {
  if (profile.size() < 2) return std::nullopt;
  const std::vector<double> usable(profile.begin() + 1, profile.end());
  const double peak = *std::max_element(usable.begin(), usable.end());
  const double threshold = std::max(kappa * median(usable), peak_fraction * peak);
  for (std::size_t k = 1; k < profile.size(); ++k) {
    const double v = profile[k];
    if (!(v > threshold)) continue;
    const bool left_ok = k == 1 || v >= profile[k - 1];
    const bool right_ok = k + 1 == profile.size() || v >= profile[k + 1];
    if (left_ok && right_ok) return Detection{k, v};
  }
  return std::nullopt;
}

std::vector<Complex> doppler_spectrum(const RangeProfiles& profiles, std::size_t antenna, std::size_t bin) {
  if (antenna >= RadarConfig::antennas || bin >= profiles.bins) throw ShapeError("doppler: cell out of range");
  const std::size_t n = profiles.chirps;
  const auto window = hann_window(n);
  std::vector<Complex> buf(n);
  for (std::size_t c = 0; c < n; ++c) buf[c] = profiles.at(antenna, c, bin) * window[c];
  fft_unitary(buf);
  std::rotate(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(n - n / 2), buf.end());  // fftshift
  return buf;
}

DopplerEstimate doppler_fft(const RangeProfiles& profiles, std::size_t antenna, std::size_t bin,
                            const RadarConfig& config) {
  const auto spectrum = doppler_spectrum(profiles, antenna, bin);
  std::size_t best = 0;
  for (std::size_t j = 1; j < spectrum.size(); ++j) {
    if (std::abs(spectrum[j]) > std::abs(spectrum[best])) best = j;
  }
  DopplerEstimate d;
  d.bin = static_cast<int>(best) - static_cast<int>(spectrum.size() / 2);
  d.velocity = d.bin * config.velocity_resolution();
  d.magnitude = std::abs(spectrum[best]);
  return d;
}

AngleEstimate estimate_angles(const RangeProfiles& profiles, std::size_t bin, int doppler_bin,
                              const RadarConfig& config) {
  const auto half = static_cast<int>(profiles.chirps / 2);
  if (doppler_bin < -half || doppler_bin >= static_cast<int>(profiles.chirps) - half) {
    throw ShapeError("estimate_angles: doppler bin out of range");
  }
  const auto j = static_cast<std::size_t>(doppler_bin + half);
  const Complex s0 = doppler_spectrum(profiles, 0, bin)[j];
  const Complex s1 = doppler_spectrum(profiles, 1, bin)[j];
  const Complex s2 = doppler_spectrum(profiles, 2, bin)[j];
  const double scale = config.wavelength() / (2.0 * kPi * config.antenna_spacing());
  AngleEstimate out;
  const double sin_az = clamp_unit(std::arg(s1 * std::conj(s0)) * scale, out.clamped);
  const double sin_el = clamp_unit(std::arg(s2 * std::conj(s0)) * scale, out.clamped);
  out.azimuth_deg = std::asin(sin_az) * kRadToDeg;
  out.elevation_deg = std::asin(sin_el) * kRadToDeg;
  return out;
}

std::vector<FrameFeatures> extract_features(const RadarCube& cube, const RadarConfig& config) {
  std::vector<RangeProfiles> profiles;
  profiles.reserve(cube.frames());
  for (std::size_t f = 0; f < cube.frames(); ++f) profiles.push_back(range_fft(cube, f));
  const auto moving = mti_filter(profiles);
  const double dr = config.range_resolution();

  std::vector<FrameFeatures> out(cube.frames());
  for (std::size_t f = 0; f < cube.frames(); ++f) {
    const auto det = localize_target(magnitude_profile(moving[f]), config.detection_kappa,
                                     config.detection_peak_fraction);
    if (!det) continue;
    // Refine on the raw profile: strongest bin next to the detection, then a parabolic fit.
    const auto raw = magnitude_profile(profiles[f]);
    std::size_t k = det->bin;
    if (k + 1 < raw.size() && raw[k + 1] > raw[k]) k = k + 1;
    if (k > 1 && raw[k - 1] > raw[k]) k = k - 1;
    double offset = 0.0;
    if (k >= 1 && k + 1 < raw.size()) offset = parabolic_offset(raw[k - 1], raw[k], raw[k + 1]);

    FrameFeatures& ff = out[f];
    ff.detected = true;
    ff.range_bin = k;
    ff.range = (static_cast<double>(k) + offset) * dr;
    const auto doppler = doppler_fft(profiles[f], 0, k, config);
    ff.doppler_bin = doppler.bin;
    ff.doppler = doppler.velocity;
    ff.magnitude = doppler.magnitude;
    const auto angles = estimate_angles(profiles[f], k, doppler.bin, config);
    ff.azimuth = angles.azimuth_deg;
    ff.elevation = angles.elevation_deg;
    ff.angle_clamped = angles.clamped;
  }
  return out;
}

WindowOutcome label_and_window(const std::vector<FrameFeatures>& frames, int label) {
  WindowOutcome outcome;
  std::size_t detected = 0;
  std::optional<std::size_t> anchor;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (!frames[f].detected) continue;
    ++detected;
    if (!anchor || frames[f].range < frames[*anchor].range) anchor = f;
  }
  if (detected < kGestureWindow) {
    outcome.rejection = "only " + std::to_string(detected) + " detected frames (need " +
                        std::to_string(kGestureWindow) + ")";
    return outcome;
  }
  GestureSample s;
  s.label = label;
  s.anchor = *anchor;
  s.window_start = s.anchor >= kGestureWindow / 2 ? s.anchor - kGestureWindow / 2 : 0;
  s.window_start = std::min(s.window_start, frames.size() - kGestureWindow);
  s.frame_labels.assign(frames.size(), kBackgroundLabel);
  std::size_t used = 0;
  for (std::size_t f = s.window_start; f < s.window_start + kGestureWindow; ++f) {
    s.frame_labels[f] = label;
    if (!frames[f].detected) continue;
    const auto v = frames[f].values();
    for (std::size_t i = 0; i < v.size(); ++i) s.features[i] += v[i];
    ++used;
  }
  for (auto& v : s.features) v /= static_cast<double>(used);
  outcome.sample = std::move(s);
  return outcome;
}

UserProfile draw_user_profile(std::mt19937_64& rng) {
  UserProfile p;
  p.speed = uniform(rng, 0.8, 1.25);
  p.extent = uniform(rng, 0.85, 1.15);
  p.swipe_distance = uniform(rng, 0.27, 0.34);
  p.push_distance = uniform(rng, 0.16, 0.2);
  p.height = normal(rng, 0.01);
  p.lateral = normal(rng, 0.01);
  p.asymmetry = uniform(rng, 0.63, 0.91);
  p.retract_ratio = uniform(rng, 2.2, 3.2);
  return p;
}

UserShift UserShift::held_out() {
  UserShift s;
  s.speed_scale = 0.8;
  s.extent_scale = 1.2;
  s.distance_offset = 0.05;
  s.height_offset = 0.04;
  s.asymmetry_scale = 0.6;
  return s;
}

UserProfile UserShift::apply(UserProfile p) const {
  p.speed *= speed_scale;
  p.extent *= extent_scale;
  p.swipe_distance += distance_offset;
  p.push_distance += distance_offset;
  p.height += height_offset;
  p.asymmetry *= asymmetry_scale;
  return p;
}

GestureTrajectory make_gesture(Gesture gesture, const UserProfile& user, const RadarConfig& config,
                               std::mt19937_64& rng) {
  const double onset = uniform(rng, 0.5, 1.2);
  const double lateral = user.lateral + normal(rng, 0.006);
  const double height = user.height + normal(rng, 0.006);

  if (gesture == Gesture::Push) {
    const double near = user.push_distance + normal(rng, 0.01);
    const double far = near + 0.28 * user.extent * uniform(rng, 0.9, 1.1);
    const double t_in = 0.4 / user.speed * uniform(rng, 0.85, 1.15);
    const double t_out = t_in * user.retract_ratio * uniform(rng, 0.9, 1.1);
    // Fast accelerating approach, slow smooth retraction.
    auto path = [=](double t) -> std::array<double, 3> {
      double z = far;
      if (t > onset && t <= onset + t_in) {
        z = far - (far - near) * (1.0 - std::cos(0.5 * kPi * (t - onset) / t_in));
      } else if (t > onset + t_in && t <= onset + t_in + t_out) {
        z = near + (far - near) * 0.5 * (1.0 - std::cos(kPi * (t - onset - t_in) / t_out));
      }
      return {lateral, height, z};
    };
    return trajectory_from_path(config, gesture, path);
  }

  const bool horizontal = gesture == Gesture::SwipeLeft || gesture == Gesture::SwipeRight;
  const double dir = (gesture == Gesture::SwipeRight || gesture == Gesture::SwipeUp) ? 1.0 : -1.0;
  const double a = 0.18 * user.extent * uniform(rng, 0.9, 1.1);
  const double duration = 0.6 / user.speed * uniform(rng, 0.85, 1.15);
  const double asym = user.asymmetry * uniform(rng, 0.8, 1.2);
  const double near = user.swipe_distance + normal(rng, 0.01);
  const double sag = 0.15 * uniform(rng, 0.8, 1.2);
  // The hand passes closest to the sensor past the midpoint of its sweep.
  const double u_closest = dir * asym * a;
  auto path = [=](double t) -> std::array<double, 3> {
    const double tau = std::clamp((t - onset) / duration, 0.0, 1.0);
    const double s = 0.5 * (1.0 - std::cos(kPi * tau));
    const double u = dir * a * (2.0 * s - 1.0);
    const double d = (u - u_closest) / a;
    const double z = near + sag * d * d;
    if (horizontal) return {lateral + u, height, z};
    return {lateral, height + u, z};
  };
  return trajectory_from_path(config, gesture, path);
}

std::uint64_t recording_seed(std::uint64_t master, std::size_t user, std::size_t cls, std::size_t sample,
                             std::size_t attempt) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(user), static_cast<std::uint32_t>(cls),
                    static_cast<std::uint32_t>(sample), static_cast<std::uint32_t>(attempt)};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

DatasetReport generate_dataset(const DatasetOptions& options, const RadarConfig& config) {
  config.validate();
  if (options.max_attempts == 0) throw ConfigError("generate_dataset: max_attempts must be positive");
  const auto& class_names = gesture_class_names();
  DatasetReport report;
  auto& table = report.table;
  table.features.resize(0, 5);
  std::vector<std::array<double, 5>> rows;

  for (std::size_t u = options.first_user; u < options.first_user + options.users; ++u) {
    // Users draw from a stream separate from any recording.
    std::mt19937_64 user_rng(recording_seed(options.seed, u, kNumGestures, 0, 0));
    UserProfile profile = draw_user_profile(user_rng);
    if (options.shift) profile = options.shift->apply(profile);

    for (std::size_t cls = 0; cls < kNumGestures; ++cls) {
      for (std::size_t i = 0; i < options.samples_per_class; ++i) {
        const std::string id = "u" + std::to_string(u) + "-" + class_names[cls] + "-" + std::to_string(i);
        bool accepted = false;
        for (std::size_t attempt = 0; attempt < options.max_attempts && !accepted; ++attempt) {
          std::mt19937_64 rng(recording_seed(options.seed, u, cls, i, attempt));
          std::string reason;
          try {
            const auto trajectory = make_gesture(static_cast<Gesture>(cls), profile, config, rng);
            const auto cube = synthesize_cube(trajectory, config, rng());
            const auto outcome = label_and_window(extract_features(cube, config), static_cast<int>(cls));
            if (outcome.sample) {
              table.ids.push_back(id);
              table.labels.push_back(static_cast<int>(cls));
              rows.push_back(outcome.sample->features);
              accepted = true;
            } else {
              reason = outcome.rejection;
            }
          } catch (const DataError& e) {
            reason = e.what();
          }
          if (!accepted) report.rejections.push_back(id + " attempt " + std::to_string(attempt) + ": " + reason);
        }
      }
    }
  }
  table.features.resize(static_cast<Eigen::Index>(rows.size()), 5);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < 5; ++c) table.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return report;
}

void write_cube(std::ostream& out, const RadarCube& cube, const std::string& config_hash) {
  static_assert(std::endian::native == std::endian::little, "cube dump assumes a little-endian host");
  auto put_u64 = [&](std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
  out.write("RLCUBE01", 8);
  put_u64(cube.frames());
  put_u64(RadarConfig::antennas);
  put_u64(cube.chirps());
  put_u64(cube.samples());
  put_u64(config_hash.size());
  out.write(config_hash.data(), static_cast<std::streamsize>(config_hash.size()));
  out.write(reinterpret_cast<const char*>(cube.data().data()),
            static_cast<std::streamsize>(cube.data().size() * sizeof(Complex)));
  if (!out) throw IoError("write_cube: stream write failed");
}

}  // namespace rlnet
