#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "mvforge/dataset_io.hpp"

namespace mvforge {

struct CountBin {
  int lo = 0;  // inclusive
  int hi = 0;  // exclusive
  std::size_t frames = 0;
};

struct DatasetStats {
  std::size_t scenes = 0;
  std::size_t frames = 0;
  std::size_t images = 0;  // frames x views
  std::size_t min_views = 0;
  std::size_t max_views = 0;
  std::size_t min_count = 0;
  std::size_t max_count = 0;
  double mean_count = 0.0;
  std::size_t total_persons = 0;
  std::array<std::size_t, 3> split_scenes{};
  std::array<std::size_t, 3> split_frames{};
  std::vector<CountBin> histogram;
  std::array<std::size_t, kWeatherCount> weather{};
  std::array<std::size_t, kTimePartCount> time_parts{};
  std::array<std::size_t, kEveningPeriodCount> evening{};
  std::array<std::size_t, 24> hours{};
};

inline constexpr int kDefaultHistogramBin = 50;

inline DatasetStats compute_stats(const DatasetManifest& m, int bin = kDefaultHistogramBin) {
  if (bin <= 0) throw ConfigError("histogram bin width must be positive");
  DatasetStats s;
  s.scenes = m.scenes.size();
  s.frames = m.frames.size();
  s.min_views = std::numeric_limits<std::size_t>::max();
  for (const auto& plan : m.scenes) {
    s.min_views = std::min(s.min_views, plan.cameras.size());
    s.max_views = std::max(s.max_views, plan.cameras.size());
    ++s.split_scenes[static_cast<std::size_t>(plan.split)];
  }
  if (m.scenes.empty()) s.min_views = 0;
  s.min_count = m.frames.empty() ? 0 : std::numeric_limits<std::size_t>::max();
  int top = 1000;
  for (const auto& f : m.frames) {
    const std::size_t n = f.frame.persons.size();
    s.images += f.files.views.size();
    s.total_persons += n;
    s.min_count = std::min(s.min_count, n);
    s.max_count = std::max(s.max_count, n);
    top = std::max(top, static_cast<int>(n) + 1);
    ++s.split_frames[static_cast<std::size_t>(m.scene(f.scene_id).split)];
    const auto& env = f.frame.environment;
    ++s.weather[static_cast<std::size_t>(env.weather)];
    ++s.time_parts[static_cast<std::size_t>(env.time_part)];
    ++s.hours[static_cast<std::size_t>(env.hour)];
    if (const auto period = evening_period_for_hour(env.hour))
      ++s.evening[static_cast<std::size_t>(*period)];
  }
  if (!m.frames.empty())
    s.mean_count = static_cast<double>(s.total_persons) / static_cast<double>(s.frames);
  for (int lo = 0; lo < top; lo += bin) s.histogram.push_back({lo, lo + bin, 0});
  for (const auto& f : m.frames)
    ++s.histogram[f.frame.persons.size() / static_cast<std::size_t>(bin)].frames;
  return s;
}

namespace detail {

inline std::string real_text(double v) {
  char buf[64];
  return std::string(buf, std::to_chars(buf, buf + sizeof(buf), v).ptr);
}

inline double share(std::size_t part, std::size_t total) {
  return total == 0 ? 0.0 : static_cast<double>(part) / static_cast<double>(total);
}

template <std::size_t N>
std::string share_csv(const char* label, const std::array<std::string_view, N>& names,
                      const std::array<std::size_t, N>& counts) {
  std::size_t total = 0;
  for (auto c : counts) total += c;
  std::string out = std::string(label) + ",frames,share\n";
  for (std::size_t i = 0; i < N; ++i)
    out += std::string(names[i]) + "," + std::to_string(counts[i]) + "," +
           real_text(share(counts[i], total)) + "\n";
  return out;
}

}  // namespace detail

inline std::string histogram_csv(const DatasetStats& s) {
  std::string out = "count_lo,count_hi,frames\n";
  for (const auto& b : s.histogram)
    out += std::to_string(b.lo) + "," + std::to_string(b.hi) + "," + std::to_string(b.frames) +
           "\n";
  return out;
}

inline std::string weather_csv(const DatasetStats& s) {
  return detail::share_csv("weather", kWeatherNames, s.weather);
}

inline std::string time_part_csv(const DatasetStats& s) {
  return detail::share_csv("time_part", kTimePartNames, s.time_parts);
}

inline std::string hour_csv(const DatasetStats& s) {
  std::string out = "hour,frames,share\n";
  for (std::size_t h = 0; h < 24; ++h)
    out += std::to_string(h) + "," + std::to_string(s.hours[h]) + "," +
           detail::real_text(detail::share(s.hours[h], s.frames)) + "\n";
  return out;
}

inline std::string dataset_card_csv(const DatasetStats& s) {
  std::string out = "field,value\n";
  auto row = [&](const std::string& k, const std::string& v) { out += k + "," + v + "\n"; };
  row("scenes", std::to_string(s.scenes));
  row("frames", std::to_string(s.frames));
  row("images", std::to_string(s.images));
  row("views_min", std::to_string(s.min_views));
  row("views_max", std::to_string(s.max_views));
  row("count_min", std::to_string(s.min_count));
  row("count_mean", detail::real_text(s.mean_count));
  row("count_max", std::to_string(s.max_count));
  row("persons_total", std::to_string(s.total_persons));
  for (std::size_t i = 0; i < 3; ++i) {
    row(std::string(kSplitNames[i]) + "_scenes", std::to_string(s.split_scenes[i]));
    row(std::string(kSplitNames[i]) + "_frames", std::to_string(s.split_frames[i]));
  }
  return out;
}

/// Minimal SVG bar chart.
inline std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                                 const std::vector<double>& values) {
  const double width = 640, height = 360, left = 50, bottom = 60, top = 40;
  const double plot_w = width - left - 20, plot_h = height - top - bottom;
  double vmax = 0.0;
  for (double v : values) vmax = std::max(vmax, v);
  if (vmax <= 0.0) vmax = 1.0;
  const double bar = labels.empty() ? 0.0 : plot_w / static_cast<double>(labels.size());
  auto num = detail::real_text;
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) +
                    "\" height=\"" + num(height) + "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  out += "<text x=\"" + num(width / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
         title + "</text>\n";
  out += "<line x1=\"" + num(left) + "\" y1=\"" + num(top + plot_h) + "\" x2=\"" +
         num(left + plot_w) + "\" y2=\"" + num(top + plot_h) + "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double h = plot_h * values[i] / vmax;
    const double x = left + bar * static_cast<double>(i);
    out += "<rect x=\"" + num(x + bar * 0.1) + "\" y=\"" + num(top + plot_h - h) +
           "\" width=\"" + num(bar * 0.8) + "\" height=\"" + num(h) +
           "\" fill=\"steelblue\"><title>" + labels[i] + ": " + num(values[i]) +
           "</title></rect>\n";
    const double lx = x + bar / 2, ly = top + plot_h + 12;
    out += "<text x=\"" + num(lx) + "\" y=\"" + num(ly) + "\" text-anchor=\"end\" transform=\"rotate(-45 " +
           num(lx) + " " + num(ly) + ")\">" + labels[i] + "</text>\n";
  }
  out += "<text x=\"" + num(left - 5) + "\" y=\"" + num(top) + "\" text-anchor=\"end\">" +
         num(vmax) + "</text>\n</svg>\n";
  return out;
}

struct StatsFile {
  std::string name;
  std::string content;
};

/// Every stats artifact, ready to write.
inline std::vector<StatsFile> stats_files(const DatasetStats& s) {
  std::vector<StatsFile> files = {{"count_histogram.csv", histogram_csv(s)},
                                  {"weather.csv", weather_csv(s)},
                                  {"time_parts.csv", time_part_csv(s)},
                                  {"hours.csv", hour_csv(s)},
                                  {"dataset_card.csv", dataset_card_csv(s)}};
  std::vector<std::string> labels;
  std::vector<double> values;
  for (const auto& b : s.histogram) {
    labels.push_back(std::to_string(b.lo) + "-" + std::to_string(b.hi - 1));
    values.push_back(static_cast<double>(b.frames));
  }
  files.push_back({"count_histogram.svg", svg_bar_chart("Frames per crowd count", labels, values)});
  labels.clear();
  values.clear();
  for (std::size_t i = 0; i < kWeatherCount; ++i) {
    labels.emplace_back(kWeatherNames[i]);
    values.push_back(detail::share(s.weather[i], s.frames));
  }
  files.push_back({"weather.svg", svg_bar_chart("Weather share", labels, values)});
  labels.clear();
  values.clear();
  for (std::size_t i = 0; i < kTimePartCount; ++i) {
    labels.emplace_back(kTimePartNames[i]);
    values.push_back(detail::share(s.time_parts[i], s.frames));
  }
  files.push_back({"time_parts.svg", svg_bar_chart("Time-of-day share", labels, values)});
  return files;
}

}  // namespace mvforge
