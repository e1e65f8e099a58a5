#include "skewcast/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>
#include <tuple>

#include "skewcast/error.hpp"

namespace skewcast {

namespace {

bool key_less(const SalesObservation& a, const SalesObservation& b) {
  return std::tie(a.item_id, a.day) < std::tie(b.item_id, b.day);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  std::string buf(s);
  char* end = nullptr;
  out = std::strtod(buf.c_str(), &end);
  return end == buf.c_str() + buf.size() && std::isfinite(out);
}

}  // namespace

SalesPanel::SalesPanel(std::vector<std::string> feature_names,
                       std::vector<SalesObservation> observations)
    : feature_names_(std::move(feature_names)), observations_(std::move(observations)) {
  for (const auto& o : observations_) {
    if (o.item_id.empty()) throw data_error("EmptyItemId", "observation without item id");
    if (o.item_id.find(',') != std::string::npos || o.item_id.find('"') != std::string::npos) {
      throw data_error("MalformedRow", "item id '" + o.item_id + "' contains a comma or quote");
    }
    if (!(o.sales >= 0.0) || !std::isfinite(o.sales)) {
      throw data_error("NegativeSales", "item " + o.item_id + " on " + format_day(o.day));
    }
    if (o.features.size() != feature_names_.size()) {
      throw data_error("FeatureLength", "item " + o.item_id + " on " + format_day(o.day) +
                                            " has " + std::to_string(o.features.size()) +
                                            " features, expected " +
                                            std::to_string(feature_names_.size()));
    }
  }
  std::stable_sort(observations_.begin(), observations_.end(), key_less);
  for (std::size_t i = 1; i < observations_.size(); ++i) {
    const auto& a = observations_[i - 1];
    const auto& b = observations_[i];
    if (a.item_id == b.item_id && a.day == b.day) {
      throw data_error("DuplicateKey", "(" + a.item_id + ", " + format_day(a.day) + ")");
    }
  }
  if (!observations_.empty()) {
    auto [lo, hi] = std::minmax_element(
        observations_.begin(), observations_.end(),
        [](const SalesObservation& a, const SalesObservation& b) { return a.day < b.day; });
    first_day_ = lo->day;
    last_day_ = hi->day;
  }
}

std::vector<std::string> SalesPanel::item_ids() const {
  std::vector<std::string> ids;
  for (const auto& o : observations_) {
    if (ids.empty() || ids.back() != o.item_id) ids.push_back(o.item_id);
  }
  return ids;
}

std::string to_string(const TargetTransform& t) {
  switch (t.kind) {
    case TransformKind::kIdentity: return "identity";
    case TransformKind::kLog: return "log";
    case TransformKind::kSqrt: return "sqrt";
  }
  return "?";
}

std::string to_string(const WeightScheme& w) {
  switch (w.kind) {
    case WeightKind::kUnit: return "unit";
    case WeightKind::kLogSales: return "log_sales";
    case WeightKind::kSqrtSales: return "sqrt_sales";
    case WeightKind::kLinearSales: return "sales";
    case WeightKind::kPower: return "power:" + format_real(w.alpha);
  }
  return "?";
}

WeightScheme parse_weight_scheme(const std::string& name) {
  if (name == "unit") return WeightScheme::unit();
  if (name == "log_sales") return WeightScheme::log_sales();
  if (name == "sqrt_sales") return WeightScheme::sqrt_sales();
  if (name == "sales" || name == "linear_sales") return WeightScheme::linear_sales();
  if (name.rfind("power:", 0) == 0) {
    double a = 0.0;
    if (parse_double(std::string_view(name).substr(6), a)) return WeightScheme::power(a);
  }
  throw config_error("UnknownWeightScheme", name);
}

bool is_supported_horizon(int weeks) noexcept { return weeks == 6 || weeks == 12 || weeks == 24; }

ForecastVersion::ForecastVersion(Day origin, int horizon_weeks)
    : origin_(origin), horizon_weeks_(horizon_weeks) {
  if (!is_supported_horizon(horizon_weeks)) {
    throw config_error("BadHorizon", std::to_string(horizon_weeks) + " weeks (expected 6, 12 or 24)");
  }
}

std::string ForecastVersion::label() const { return "VDP_" + format_day_compact(origin_); }

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

SalesPanel parse_panel_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw data_error("MalformedRow", "line 1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (header.size() < 3 || header[0] != "item_id" || header[1] != "day" || header[2] != "sales") {
    throw data_error("MalformedRow", "line 1: header must start with item_id,day,sales");
  }
  std::vector<std::string> features;
  for (std::size_t i = 3; i < header.size(); ++i) {
    if (header[i].empty()) throw data_error("MalformedRow", "line 1: empty feature name");
    features.emplace_back(header[i]);
  }

  std::vector<SalesObservation> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    const auto cells = split_commas(line);
    if (cells.size() != header.size()) {
      throw data_error("MalformedRow", where + ": expected " + std::to_string(header.size()) +
                                           " fields, got " + std::to_string(cells.size()));
    }
    SalesObservation o;
    o.item_id = std::string(cells[0]);
    if (o.item_id.empty() || o.item_id.find('"') != std::string::npos) {
      throw data_error("MalformedRow", where + ": bad item id");
    }
    try {
      o.day = parse_day(cells[1]);
    } catch (const Error&) {
      throw data_error("MalformedRow", where + ": bad day '" + std::string(cells[1]) + "'");
    }
    if (!parse_double(cells[2], o.sales)) throw data_error("MalformedRow", where + ": bad sales");
    if (o.sales < 0.0) throw data_error("NegativeSales", where);
    o.features.resize(features.size());
    for (std::size_t k = 0; k < features.size(); ++k) {
      if (!parse_double(cells[3 + k], o.features[k])) {
        throw data_error("MalformedRow", where + ": bad value for " + features[k]);
      }
    }
    rows.push_back(std::move(o));
  }
  return SalesPanel(std::move(features), std::move(rows));
}

SalesPanel read_panel(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_panel_csv(buf.str());
}

std::string panel_to_csv(const SalesPanel& panel) {
  std::string out = "item_id,day,sales";
  for (const auto& f : panel.feature_names()) out += "," + f;
  out += '\n';
  for (const auto& o : panel.observations()) {
    out += o.item_id;
    out += ',';
    out += format_day(o.day);
    out += ',';
    out += format_real(o.sales);
    for (double f : o.features) {
      out += ',';
      out += format_real(f);
    }
    out += '\n';
  }
  return out;
}

void write_panel(const SalesPanel& panel, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out << panel_to_csv(panel);
  if (!out) throw io_error("write failed for " + path.string());
}

}  // namespace skewcast
