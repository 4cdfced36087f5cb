// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RTAP_SYNTHGEN_HPP
#define RTAP_SYNTHGEN_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rtap/common.hpp"
#include "rtap/hours.hpp"
#include "rtap/records.hpp"
#include "rtap/rng.hpp"

namespace rtap {

// Signal parameters for one fleet of servers. Every KPI is a baseline
// plus a daily sinusoid plus AR(1) noise; per-server offsets and phases
// are drawn from the fleet seed.
struct ServerProfile {
  std::string business = "Biz";
  std::size_t n_disks = 2;

  double cpu_base = 0.42, cpu_amplitude = 0.14, cpu_rho = 0.70, cpu_sigma = 0.022;
  double cpu_spread = 0.09, cpu_spread_sigma = 0.018;
  double mem_base = 0.55, mem_amplitude = 0.04, mem_rho = 0.85, mem_sigma = 0.012;
  double mem_spread = 0.04, mem_spread_sigma = 0.008;
  double disk_base = 0.30, disk_spacing = 0.20, disk_drift = 3e-5;
  double disk_rho = 0.90, disk_sigma = 0.004;

  // Unit deviation for anomaly signatures, roughly one overall standard
  // deviation of the corresponding KPI series.
  double cpu_unit = 0.11, mem_unit = 0.05, disk_unit = 0.025;

  void validate() const {
    for (double rho : {cpu_rho, mem_rho, disk_rho})
      if (!(rho >= 0.0 && rho < 1.0))
        throw std::invalid_argument("ServerProfile: AR coefficients must be in [0, 1)");
    for (double v : {cpu_base, mem_base, disk_base})
      if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("ServerProfile: baselines must be in [0, 1]");
    for (double v : {cpu_amplitude, mem_amplitude, cpu_sigma, mem_sigma, disk_sigma})
      if (v < 0.0)
        throw std::invalid_argument("ServerProfile: amplitudes and noise scales "
                                    "must be non-negative");
  }

  static ServerProfile for_business(const std::string& tag) {
    ServerProfile p;
    p.business = tag;
    if (tag == "Mon") {
      p.cpu_amplitude = 0.18;
      p.cpu_base = 0.38;
    } else if (tag == "Ora") {
      p.mem_base = 0.62;
      p.disk_drift = 5e-5;
      p.disk_base = 0.35;
    } else if (tag == "Trd") {
      p.cpu_amplitude = 0.10;
      p.cpu_sigma = 0.016;
      p.cpu_base = 0.33;
    } else if (tag != "Biz") {
      throw std::invalid_argument("unknown business tag '" + tag +
                                  "' (expected Biz, Mon, Ora or Trd)");
    }
    return p;
  }
};

// Which KPIs an anomaly of one severity perturbs, by how many signature
// units, and for how long. Severities are graded: higher levels push more
// KPIs, harder, for longer.
struct AnomalySignature {
  double magnitude = 2.0;  // in profile signature units
  int duration_hours = 1;
  bool hits_cpu = true;
  bool hits_mem = false;
  bool hits_disk = false;
};

// Hourly anomaly incidence per severity plus the severity signatures.
// Events ramp up over the two hours before onset (a precursor drift that
// carries no alarm), which is what makes next-hour prediction possible.
struct AnomalyCampaign {
  std::array<double, 3> hourly_rate{0.0, 0.0, 0.0};  // events per server-hour; [low, medium, high]
  std::array<AnomalySignature, 3> signatures{
      AnomalySignature{2.0, 1, true, false, false},
      AnomalySignature{4.0, 2, true, true, false},
      AnomalySignature{6.0, 3, true, true, true},
  };
  std::array<double, 2> precursor_ramp{0.35, 0.70};  // share of magnitude at T-2, T-1

  void validate() const {
    double total = 0.0;
    for (double r : hourly_rate) {
      if (r < 0.0) throw std::invalid_argument("AnomalyCampaign: negative rate");
      total += r;
    }
    if (total > 1.0)
      throw DataError("AnomalyCampaign: rates imply more than one anomaly per "
                      "server-hour");
    for (const auto& s : signatures)
      if (s.duration_hours < 1 || s.magnitude <= 0.0)
        throw std::invalid_argument("AnomalyCampaign: bad signature");
  }

  // Rates hitting a target normal:anomalous instance ratio, with the
  // anomalous hours split across severities by hour share.
  static AnomalyCampaign for_imbalance(double ratio,
                                       std::array<double, 3> hour_mix = {0.65, 0.25,
                                                                         0.10}) {
    if (!(ratio > 0.0))
      throw std::invalid_argument("AnomalyCampaign: imbalance ratio must be positive");
    AnomalyCampaign c;
    double fraction = 1.0 / (1.0 + ratio);
    for (std::size_t s = 0; s < 3; ++s)
      c.hourly_rate[s] =
          fraction * hour_mix[s] / static_cast<double>(c.signatures[s].duration_hours);
    return c;
  }
};

inline double business_imbalance_ratio(const std::string& tag) {
  if (tag == "Biz") return 70.0;
  if (tag == "Mon") return 60.0;
  if (tag == "Ora") return 40.0;
  if (tag == "Trd") return 275.0;
  throw std::invalid_argument("unknown business tag '" + tag + "'");
}

struct FleetData {
  std::vector<KpiRecord> kpi;
  std::vector<AlarmRecord> alarms;
};

inline HourStamp default_fleet_start() {
  return HourStamp{detail::days_from_civil(2021, 1, 1) * 24};
}

namespace detail {

struct ScheduledEvent {
  std::size_t start = 0;
  int severity = 1;  // 1..3
};

// Non-overlapping event placement. Hour targets per severity cascade
// high -> low so rounding error in the rare classes is absorbed by the
// frequent ones and the realized imbalance tracks the configured ratio.
inline std::vector<ScheduledEvent> schedule_events(const AnomalyCampaign& campaign,
                                                   std::size_t hours,
                                                   std::mt19937_64& rng) {
  std::array<std::size_t, 3> quota{};
  double carry = 0.0;
  for (int s = 2; s >= 0; --s) {
    double duration = static_cast<double>(campaign.signatures[s].duration_hours);
    double target_hours =
        campaign.hourly_rate[s] * static_cast<double>(hours) * duration + carry;
    auto events = static_cast<std::int64_t>(std::llround(target_hours / duration));
    if (events < 0) events = 0;
    quota[s] = static_cast<std::size_t>(events);
    carry = target_hours - static_cast<double>(events) * duration;
  }

  std::vector<std::uint8_t> claimed(hours, 0);
  std::vector<ScheduledEvent> events;
  for (int s = 2; s >= 0; --s) {
    const int duration = campaign.signatures[s].duration_hours;
    // Claim covers the precursor ramp, the event and a cooldown so
    // neighboring events never blend.
    const std::size_t margin = 2;
    std::size_t placed = 0, attempts = 0;
    const std::size_t max_attempts = 200 * (quota[s] + 1);
    while (placed < quota[s] && attempts < max_attempts) {
      ++attempts;
      if (hours < static_cast<std::size_t>(duration) + 2 * margin + 1) break;
      std::uniform_int_distribution<std::size_t> dist(
          margin, hours - static_cast<std::size_t>(duration) - margin - 1);
      std::size_t start = dist(rng);
      std::size_t lo = start - margin;
      std::size_t hi = start + static_cast<std::size_t>(duration) + margin;
      bool free = true;
      for (std::size_t h = lo; h < hi && free; ++h) free = claimed[h] == 0;
      if (!free) continue;
      for (std::size_t h = lo; h < hi; ++h) claimed[h] = 1;
      events.push_back({start, s + 1});
      ++placed;
    }
  }
  std::sort(events.begin(), events.end(),
            [](const ScheduledEvent& a, const ScheduledEvent& b) {
              return a.start < b.start;
            });
  return events;
}

}  // namespace detail

// Generates a deterministic fleet trace: per server a seasonal AR(1)
// signal per KPI plus scheduled anomaly events that perturb KPIs
// according to their severity signature and emit one alarm per anomalous
// hour. The base signal stream is independent of the campaign, so the
// same seed with a zero-rate campaign yields the identical trace minus
// the anomalies.
inline FleetData generate_fleet(const ServerProfile& profile, std::size_t servers,
                                std::size_t hours, const AnomalyCampaign& campaign,
                                std::uint64_t seed,
                                HourStamp start = default_fleet_start()) {
  profile.validate();
  campaign.validate();
  if (servers < 1) throw std::invalid_argument("generate_fleet: need >= 1 server");
  if (hours < 24) throw std::invalid_argument("generate_fleet: need >= 24 hours");

  FleetData fleet;
  fleet.kpi.reserve(servers * hours);

  for (std::size_t server = 0; server < servers; ++server) {
    char name[32];
    std::snprintf(name, sizeof(name), "%s-%03zu", profile.business.c_str(), server);
    const std::string server_id = name;

    auto rng_base = make_rng(seed, {server, 0});
    auto rng_sched = make_rng(seed, {server, 1});
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    // Per-server variation of the fleet profile.
    const double cpu_base = profile.cpu_base + 0.06 * (2.0 * uniform(rng_base) - 1.0);
    const double cpu_amp = profile.cpu_amplitude * (0.85 + 0.3 * uniform(rng_base));
    const double phase = 24.0 * uniform(rng_base);
    const double mem_base = profile.mem_base + 0.08 * (2.0 * uniform(rng_base) - 1.0);
    std::vector<double> disk_base(profile.n_disks);
    for (std::size_t d = 0; d < profile.n_disks; ++d)
      disk_base[d] = clamp01(profile.disk_base +
                             profile.disk_spacing * static_cast<double>(d) +
                             0.05 * (2.0 * uniform(rng_base) - 1.0));

    // Additive severity bumps per hour, in absolute usage units.
    std::vector<double> bump_cpu(hours, 0.0), bump_mem(hours, 0.0),
        bump_disk(hours, 0.0);
    auto events = detail::schedule_events(campaign, hours, rng_sched);
    std::size_t event_ordinal = 0;
    for (const auto& event : events) {
      const auto& sig = campaign.signatures[static_cast<std::size_t>(event.severity - 1)];
      auto add = [&](std::size_t h, double share) {
        if (h >= hours) return;
        if (sig.hits_cpu) bump_cpu[h] += share * sig.magnitude * profile.cpu_unit;
        if (sig.hits_mem) bump_mem[h] += share * sig.magnitude * profile.mem_unit;
        if (sig.hits_disk) bump_disk[h] += share * sig.magnitude * profile.disk_unit;
      };
      for (std::size_t p = 0; p < campaign.precursor_ramp.size(); ++p) {
        std::size_t offset = campaign.precursor_ramp.size() - p;  // 2, then 1
        if (event.start >= offset) add(event.start - offset, campaign.precursor_ramp[p]);
      }
      ++event_ordinal;
      for (int h = 0; h < sig.duration_hours; ++h) {
        add(event.start + static_cast<std::size_t>(h), 1.0);
        fleet.alarms.push_back(
            {server_id, start + static_cast<std::int64_t>(event.start) + h,
             static_cast<Severity>(event.severity),
             "event " + std::to_string(event_ordinal) + " hour " +
                 std::to_string(h + 1) + " of " + std::to_string(sig.duration_hours)});
      }
    }

    double cpu_noise = 0.0, mem_noise = 0.0;
    std::vector<double> disk_noise(profile.n_disks, 0.0);
    const double cpu_innov = profile.cpu_sigma * std::sqrt(1.0 - profile.cpu_rho * profile.cpu_rho);
    const double mem_innov = profile.mem_sigma * std::sqrt(1.0 - profile.mem_rho * profile.mem_rho);
    const double disk_innov =
        profile.disk_sigma * std::sqrt(1.0 - profile.disk_rho * profile.disk_rho);

    for (std::size_t h = 0; h < hours; ++h) {
      cpu_noise = profile.cpu_rho * cpu_noise + cpu_innov * normal(rng_base);
      mem_noise = profile.mem_rho * mem_noise + mem_innov * normal(rng_base);
      double cpu_spread_hi =
          std::max(0.015, profile.cpu_spread + profile.cpu_spread_sigma * normal(rng_base));
      double cpu_spread_lo =
          std::max(0.015, profile.cpu_spread + profile.cpu_spread_sigma * normal(rng_base));
      double mem_spread_hi =
          std::max(0.008, profile.mem_spread + profile.mem_spread_sigma * normal(rng_base));
      double mem_spread_lo =
          std::max(0.008, profile.mem_spread + profile.mem_spread_sigma * normal(rng_base));

      const double day = 2.0 * std::numbers::pi * (static_cast<double>(h) + phase) / 24.0;
      double cpu_avg = cpu_base + cpu_amp * std::sin(day) + cpu_noise + bump_cpu[h];
      double mem_avg = mem_base + profile.mem_amplitude * std::sin(day + 1.3) +
                       mem_noise + bump_mem[h];

      KpiRecord rec;
      rec.server_id = server_id;
      rec.timestamp = start + static_cast<std::int64_t>(h);
      rec.cpu_avg = clamp01(cpu_avg);
      rec.cpu_max = clamp01(rec.cpu_avg + cpu_spread_hi);
      rec.cpu_min = clamp01(rec.cpu_avg - cpu_spread_lo);
      rec.mem_avg = clamp01(mem_avg);
      rec.mem_max = clamp01(rec.mem_avg + mem_spread_hi);
      rec.mem_min = clamp01(rec.mem_avg - mem_spread_lo);
      rec.disk_usages.resize(profile.n_disks);
      for (std::size_t d = 0; d < profile.n_disks; ++d) {
        disk_noise[d] = profile.disk_rho * disk_noise[d] + disk_innov * normal(rng_base);
        double v = disk_base[d] + profile.disk_drift * static_cast<double>(h) +
                   disk_noise[d] + (d == 0 ? bump_disk[h] : 0.0);
        rec.disk_usages[d] = clamp01(v);
      }
      fleet.kpi.push_back(std::move(rec));
    }
  }

  std::sort(fleet.alarms.begin(), fleet.alarms.end(),
            [](const AlarmRecord& a, const AlarmRecord& b) {
              if (a.server_id != b.server_id) return a.server_id < b.server_id;
              return a.timestamp < b.timestamp;
            });
  return fleet;
}

struct CorruptionReport {
  std::size_t rows_removed = 0;
  std::size_t values_out_of_range = 0;
  std::size_t duplicates_injected = 0;
};

// Degrades clean records for preprocessing tests and demos: deletes rows
// at missing_rate and, at noise_rate, either pushes one value out of
// range or injects a duplicate key. Deterministic per seed.
inline std::pair<std::vector<KpiRecord>, CorruptionReport> corrupt(
    std::span<const KpiRecord> records, double missing_rate, double noise_rate,
    std::uint64_t seed) {
  if (!(missing_rate >= 0.0 && missing_rate < 1.0) ||
      !(noise_rate >= 0.0 && noise_rate < 1.0))
    throw std::invalid_argument("corrupt: rates must be in [0, 1)");

  auto rng = make_rng(seed, {0xc0deULL});
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  CorruptionReport report;
  std::vector<KpiRecord> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    if (missing_rate > 0.0 && uniform(rng) < missing_rate) {
      ++report.rows_removed;
      continue;
    }
    if (noise_rate > 0.0 && uniform(rng) < noise_rate) {
      if (uniform(rng) < 0.5) {
        KpiRecord noisy = rec;
        noisy.cpu_max = 1.0 + 0.01 + 0.5 * uniform(rng);  // strictly out of range
        ++report.values_out_of_range;
        out.push_back(std::move(noisy));
      } else {
        out.push_back(rec);
        out.push_back(rec);  // duplicate key, first occurrence wins in clean()
        ++report.duplicates_injected;
      }
      continue;
    }
    out.push_back(rec);
  }
  return {std::move(out), report};
}

}  // namespace rtap

#endif  // RTAP_SYNTHGEN_HPP
