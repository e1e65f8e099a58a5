#include "skewcast/datagen.hpp"

#include <cmath>
#include <cstdio>

#include "parallel_for.hpp"
#include "skewcast/error.hpp"
#include "skewcast/rng.hpp"

namespace skewcast {

namespace {

enum Stream : std::uint64_t { kPopularity = 1, kPrice = 2, kSales = 3 };

std::string item_label(int i, int n_items) {
  int width = 4;
  for (int n = n_items; n >= 10000; n /= 10) ++width;
  char buf[32];
  std::snprintf(buf, sizeof buf, "item_%0*d", width, i);
  return buf;
}

// Rows for one item, ordered by day.
void generate_item(const GenConfig& cfg, Day start, const std::vector<double>& spike_mult, int item,
                   std::vector<SalesObservation>& out) {
  const auto i = static_cast<std::uint64_t>(item);
  CounterRng item_rng(hash_key(cfg.seed, kPopularity, i));
  const double log_pop = cfg.popularity_log_mean + cfg.popularity_log_sd * item_rng.normal();
  const double popularity = std::exp(log_pop);
  double log_price = 0.2 * item_rng.normal();
  const std::string id = item_label(item, cfg.n_items);

  out.resize(static_cast<std::size_t>(cfg.n_days));
  for (int d = 0; d < cfg.n_days; ++d) {
    const auto day = static_cast<std::uint64_t>(d);
    if (d > 0) log_price += cfg.price_volatility * CounterRng(hash_key(cfg.seed, kPrice, i, day)).normal();
    const Day date = add_days(start, d);
    const double weekly = cfg.weekly_seasonality[static_cast<std::size_t>(weekday_index(date))];
    const double spike = spike_mult[static_cast<std::size_t>(d)];
    const double rate = popularity * weekly * spike * std::exp(cfg.price_elasticity * log_price);

    CounterRng cell(hash_key(cfg.seed, kSales, i, day));
    const std::uint64_t events = cell.poisson(rate);
    // A sum of `events` iid Gamma(shape, scale) draws is Gamma(events * shape, scale).
    const double sales =
        events > 0 ? cell.gamma(static_cast<double>(events) * cfg.gamma_shape, cfg.gamma_scale) : 0.0;

    SalesObservation& o = out[static_cast<std::size_t>(d)];
    o.item_id = id;
    o.day = date;
    o.sales = sales;
    o.features = {log_price, weekly, spike > 1.0 ? 1.0 : 0.0, log_pop};
  }
}

SalesPanel generate_impl(const GenConfig& cfg, bool parallel) {
  cfg.validate();
  const Day start = parse_day(cfg.start_day);
  std::vector<double> spike_mult(static_cast<std::size_t>(cfg.n_days), 1.0);
  for (const SpikeDay& s : cfg.spike_days) {
    if (s.offset < cfg.n_days) spike_mult[static_cast<std::size_t>(s.offset)] *= s.multiplier;
  }
  std::vector<std::vector<SalesObservation>> per_item(static_cast<std::size_t>(cfg.n_items));
  auto work = [&](std::size_t i) {
    generate_item(cfg, start, spike_mult, static_cast<int>(i), per_item[i]);
  };
  if (parallel) {
    parallel_for(per_item.size(), work);
  } else {
    for (std::size_t i = 0; i < per_item.size(); ++i) work(i);
  }
  std::vector<SalesObservation> rows;
  rows.reserve(per_item.size() * static_cast<std::size_t>(cfg.n_days));
  for (auto& item : per_item) {
    for (auto& o : item) rows.push_back(std::move(o));
  }
  return SalesPanel(kGeneratedFeatures, std::move(rows));
}

}  // namespace

std::vector<SpikeDay> GenConfig::default_spike_days(int n_days) {
  std::vector<SpikeDay> out;
  for (int year = 0; 365 * year < n_days; ++year) {
    for (const SpikeDay& e : {SpikeDay{190, 4.0}, SpikeDay{328, 5.0}, SpikeDay{353, 3.0}}) {
      const int offset = 365 * year + e.offset;
      if (offset < n_days) out.push_back({offset, e.multiplier});
    }
  }
  return out;
}

void GenConfig::validate() const {
  if (n_items < 1) throw config_error("BadGenConfig", "n_items must be >= 1");
  if (n_days < 1) throw config_error("BadGenConfig", "n_days must be >= 1");
  if (!(popularity_log_sd >= 0.0) || !std::isfinite(popularity_log_mean)) {
    throw config_error("BadGenConfig", "popularity lognormal needs a finite mean and sd >= 0");
  }
  if (!(gamma_shape > 0.0) || !(gamma_scale > 0.0)) {
    throw config_error("BadGenConfig", "gamma shape and scale must be > 0");
  }
  if (!(price_elasticity <= 0.0)) throw config_error("BadGenConfig", "price_elasticity must be <= 0");
  if (!(price_volatility >= 0.0)) throw config_error("BadGenConfig", "price_volatility must be >= 0");
  for (const SpikeDay& s : spike_days) {
    if (s.offset < 0 || !(s.multiplier >= 1.0) || !std::isfinite(s.multiplier)) {
      throw config_error("BadGenConfig", "spike days need offset >= 0 and multiplier >= 1");
    }
  }
  for (double w : weekly_seasonality) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw config_error("BadGenConfig", "weekly multipliers must be >= 0");
  }
  try {
    (void)parse_day(start_day);
  } catch (const Error& e) {
    throw config_error("BadGenConfig", e.what());
  }
}

SalesPanel generate(const GenConfig& cfg) { return generate_impl(cfg, true); }

namespace serial {
SalesPanel generate(const GenConfig& cfg) { return generate_impl(cfg, false); }
}  // namespace serial

double theoretical_tweedie_power(const GenConfig& cfg) {
  if (!(cfg.gamma_shape > 0.0)) throw config_error("BadGenConfig", "gamma_shape must be > 0");
  return (cfg.gamma_shape + 2.0) / (cfg.gamma_shape + 1.0);
}

}  // namespace skewcast
