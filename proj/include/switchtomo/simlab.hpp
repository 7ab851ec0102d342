// Copyright 2026 The switchtomo authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>

#include "switchtomo/tomoset.hpp"

namespace switchtomo::simlab {

using procmat::ProcessMatrix;
using qsys::CMat;
using qsys::RVec;
using tomoset::SettingFamily;
using tomoset::SettingIndex;

// ---------------------------------------------------------------------------
// Randomness
// ---------------------------------------------------------------------------
//
// All sampling uses mt19937_64 with per-group substreams derived by splitmix64
// from (seed, group index), so groups are independent and a table is
// reproducible bit for bit from its recorded seed.

namespace rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(index + 1)));
}

inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

/// Box-Muller normal deviate (explicit, for cross-platform determinism).
inline double gaussian(std::mt19937_64& g) {
  double u1 = uniform01(g), u2 = uniform01(g);
  while (u1 <= 1e-300) u1 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace rng

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

struct NoiseModel {
  std::int64_t shots = 1600;       // coincidence counts per experimental configuration
  double jitter_sigma_deg = 0.0;   // waveplate-angle jitter, degrees (0 = off)
  double visibility_sq = 1.0;      // interferometer visibility v^2 (game model only)

  void validate() const {
    if (shots < 1) throw std::invalid_argument("NoiseModel: shots must be >= 1");
    if (visibility_sq < 0.0 || visibility_sq > 1.0)
      throw std::invalid_argument("NoiseModel: visibility squared must lie in [0,1]");
  }
};

struct CountTable {
  SettingFamily family = SettingFamily::Restricted;
  std::vector<std::int64_t> counts;  // by linear setting index
  std::int64_t shots_per_config = 0;
  std::uint64_t seed = 0;
  double jitter_sigma_deg = 0.0;

  std::int64_t group_total(int group) const {
    std::int64_t n = 0;
    for (int o = 0; o < 8; ++o) n += counts[static_cast<size_t>(group * 8 + o)];
    return n;
  }
};

struct ProbabilityTable {
  SettingFamily family = SettingFamily::Restricted;
  RVec p;
};

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

namespace detail {

/// True outcome probabilities of one (x,y,z,w) group with all waveplate
/// angles of the group jittered, renormalized over the eight outcomes (the
/// jittered effect pairs no longer close to the identity, as in the lab).
inline std::array<double, 8> group_probabilities_jittered(const ProcessMatrix& w,
                                                          SettingFamily fam, int group,
                                                          double sigma_deg,
                                                          std::mt19937_64& g) {
  const auto& f = tomoset::fixtures(fam);
  SettingIndex s0 = tomoset::index_from_linear(group * 8, fam);

  auto jit = [&](tomoset::WaveplatePair a) {
    return tomoset::WaveplatePair{a.qwp_deg + sigma_deg * rng::gaussian(g),
                                  a.hwp_deg + sigma_deg * rng::gaussian(g)};
  };

  auto prep = [&](tomoset::WaveplatePair a) { return qsys::proj(tomoset::prep_ket(a.qwp_deg, a.hwp_deg)); };
  auto meas = [&](tomoset::WaveplatePair a) {
    return qsys::proj(tomoset::measure_ket(a.qwp_deg, a.hwp_deg));
  };

  CMat psi = prep(jit(f.state_angles[static_cast<size_t>(s0.w - 1)]));
  std::array<CMat, 2> ma = {meas(jit(f.effect_angles[static_cast<size_t>(s0.jA - 1)][0])),
                            meas(jit(f.effect_angles[static_cast<size_t>(s0.jA - 1)][1]))};
  std::array<CMat, 2> mb = {meas(jit(f.effect_angles[static_cast<size_t>(s0.jB - 1)][0])),
                            meas(jit(f.effect_angles[static_cast<size_t>(s0.jB - 1)][1]))};
  CMat phi_a = prep(jit(f.reprep_angles[static_cast<size_t>(s0.kA - 1)]));
  CMat phi_b = prep(jit(f.reprep_angles[static_cast<size_t>(s0.kB - 1)]));

  std::array<double, 8> p{};
  double total = 0.0;
  for (int a = 0; a < 2; ++a) {
    CMat ea = qsys::kron(ma[static_cast<size_t>(a)], phi_a.transpose());
    for (int b = 0; b < 2; ++b) {
      CMat eb = qsys::kron(mb[static_cast<size_t>(b)], phi_b.transpose());
      for (int c = 0; c < 2; ++c) {
        CMat s = qsys::kron_all({psi.transpose(), ea, eb,
                                 f.future[static_cast<size_t>(s0.z - 1)][static_cast<size_t>(c)]});
        double v = std::max(0.0, qsys::trace_inner(w.mat, s).real());
        p[static_cast<size_t>(4 * a + 2 * b + c)] = v;
        total += v;
      }
    }
  }
  for (auto& v : p) v /= total;
  return p;
}

/// Multinomial draw by sequential inverse-CDF sampling, preserving the group
/// total exactly.
inline std::array<std::int64_t, 8> multinomial(const std::array<double, 8>& p, std::int64_t n,
                                               std::mt19937_64& g) {
  std::array<double, 8> cdf{};
  double acc = 0.0;
  for (int i = 0; i < 8; ++i) {
    acc += p[static_cast<size_t>(i)];
    cdf[static_cast<size_t>(i)] = acc;
  }
  std::array<std::int64_t, 8> counts{};
  for (std::int64_t k = 0; k < n; ++k) {
    double u = rng::uniform01(g) * acc;
    int i = 0;
    while (i < 7 && u > cdf[static_cast<size_t>(i)]) ++i;
    ++counts[static_cast<size_t>(i)];
  }
  return counts;
}

}  // namespace detail

/// Exact Born-rule probabilities as a table (the infinite-shot limit).
inline ProbabilityTable exact_table(const ProcessMatrix& w, SettingFamily fam) {
  return {fam, tomoset::exact_probabilities(w, fam)};
}

/// Finite-shot synthetic experiment. Each (x,y,z,w) group is sampled as one
/// multinomial over its eight joint outcomes with total shots * 4 (four
/// (a,b) waveplate configurations per group, both c ports read per
/// configuration). With jitter enabled, the group's true probabilities come
/// from waveplate angles perturbed by N(0, sigma).
inline CountTable simulate_counts(const ProcessMatrix& w, SettingFamily fam,
                                  const NoiseModel& noise, std::uint64_t seed) {
  noise.validate();
  CountTable table;
  table.family = fam;
  table.shots_per_config = noise.shots;
  table.seed = seed;
  table.jitter_sigma_deg = noise.jitter_sigma_deg;
  table.counts.assign(static_cast<size_t>(tomoset::family_size(fam)), 0);

  RVec exact;
  if (noise.jitter_sigma_deg == 0.0) exact = tomoset::exact_probabilities(w, fam);

  const std::int64_t per_group = noise.shots * 4;
  for (int grp = 0; grp < tomoset::group_count(fam); ++grp) {
    auto g = rng::substream(seed, static_cast<std::uint64_t>(grp));
    std::array<double, 8> p{};
    if (noise.jitter_sigma_deg == 0.0) {
      double total = 0.0;
      for (int o = 0; o < 8; ++o) total += exact(grp * 8 + o);
      for (int o = 0; o < 8; ++o) p[static_cast<size_t>(o)] = exact(grp * 8 + o) / total;
    } else {
      p = detail::group_probabilities_jittered(w, fam, grp, noise.jitter_sigma_deg, g);
    }
    auto counts = detail::multinomial(p, per_group, g);
    for (int o = 0; o < 8; ++o) table.counts[static_cast<size_t>(grp * 8 + o)] = counts[static_cast<size_t>(o)];
  }
  return table;
}

/// p = C / N_group per setting. Rejects groups without any counts.
inline ProbabilityTable normalize(const CountTable& counts) {
  ProbabilityTable out;
  out.family = counts.family;
  out.p.resize(tomoset::family_size(counts.family));
  for (int grp = 0; grp < tomoset::group_count(counts.family); ++grp) {
    std::int64_t n = counts.group_total(grp);
    if (n == 0) throw std::runtime_error("normalize: empty normalization group");
    for (int o = 0; o < 8; ++o)
      out.p(grp * 8 + o) =
          static_cast<double>(counts.counts[static_cast<size_t>(grp * 8 + o)]) / static_cast<double>(n);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Statistical error
// ---------------------------------------------------------------------------

/// Average statistical error per setting. `per_sqrt_count` follows the
/// published formula p(1-p)/sqrt(N_group); `binomial` is the standard
/// deviation sqrt(p(1-p)/N_group). Both are means over all settings.
struct StatError {
  double per_sqrt_count = 0.0;
  double binomial = 0.0;
};

inline StatError stat_error(const ProbabilityTable& p, const CountTable& counts) {
  if (p.family != counts.family) throw std::invalid_argument("stat_error: family mismatch");
  const int n = tomoset::family_size(p.family);
  StatError e;
  for (int i = 0; i < n; ++i) {
    double ng = static_cast<double>(counts.group_total(i / 8));
    double var = p.p(i) * (1.0 - p.p(i));
    e.per_sqrt_count += var / std::sqrt(ng);
    e.binomial += std::sqrt(var / ng);
  }
  e.per_sqrt_count /= n;
  e.binomial /= n;
  return e;
}

// ---------------------------------------------------------------------------
// CSV interchange
// ---------------------------------------------------------------------------
//
// One row per setting: a,b,c,jA,kA,jB,kB,z,w and either a count or a
// probability column. The leading comment line records family and metadata.

inline void write_counts_csv(std::ostream& os, const CountTable& t) {
  os << "# family=" << tomoset::to_string(t.family) << " shots=" << t.shots_per_config
     << " seed=" << t.seed << " jitter_deg=" << t.jitter_sigma_deg << "\n";
  os << "a,b,c,jA,kA,jB,kB,z,w,count\n";
  for (int lin = 0; lin < tomoset::family_size(t.family); ++lin) {
    SettingIndex s = tomoset::index_from_linear(lin, t.family);
    os << s.a << ',' << s.b << ',' << s.c << ',' << s.jA << ',' << s.kA << ',' << s.jB << ','
       << s.kB << ',' << s.z << ',' << s.w << ',' << t.counts[static_cast<size_t>(lin)] << '\n';
  }
}

inline void write_probabilities_csv(std::ostream& os, const ProbabilityTable& t) {
  os << "# family=" << tomoset::to_string(t.family) << "\n";
  os << "a,b,c,jA,kA,jB,kB,z,w,p\n";
  for (int lin = 0; lin < tomoset::family_size(t.family); ++lin) {
    SettingIndex s = tomoset::index_from_linear(lin, t.family);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", t.p(lin));
    os << s.a << ',' << s.b << ',' << s.c << ',' << s.jA << ',' << s.kA << ',' << s.jB << ','
       << s.kB << ',' << s.z << ',' << s.w << ',' << buf << '\n';
  }
}

namespace detail {

struct CsvHeader {
  SettingFamily family;
  std::map<std::string, std::string> meta;
  bool is_counts = false;
};

inline CsvHeader read_csv_header(std::istream& is) {
  CsvHeader h{SettingFamily::Restricted, {}, false};
  std::string line;
  if (!std::getline(is, line) || line.empty() || line[0] != '#')
    throw std::runtime_error("table csv: missing metadata comment line");
  std::istringstream meta(line.substr(1));
  std::string kv;
  bool family_seen = false;
  while (meta >> kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    h.meta[kv.substr(0, eq)] = kv.substr(eq + 1);
    if (kv.substr(0, eq) == "family") {
      h.family = tomoset::family_from_string(kv.substr(eq + 1));
      family_seen = true;
    }
  }
  if (!family_seen) throw std::runtime_error("table csv: missing family metadata");
  if (!std::getline(is, line)) throw std::runtime_error("table csv: missing header row");
  h.is_counts = line.find(",count") != std::string::npos;
  return h;
}

inline SettingIndex parse_row(const std::string& line, std::string& value) {
  SettingIndex s;
  std::istringstream ss(line);
  std::string tok;
  int fields[9];
  for (int i = 0; i < 9; ++i) {
    if (!std::getline(ss, tok, ',')) throw std::runtime_error("table csv: short row");
    fields[i] = std::stoi(tok);
  }
  if (!std::getline(ss, value)) throw std::runtime_error("table csv: missing value column");
  s.a = fields[0];
  s.b = fields[1];
  s.c = fields[2];
  s.jA = fields[3];
  s.kA = fields[4];
  s.jB = fields[5];
  s.kB = fields[6];
  s.z = fields[7];
  s.w = fields[8];
  return s;
}

}  // namespace detail

inline CountTable read_counts_csv(std::istream& is) {
  auto h = detail::read_csv_header(is);
  if (!h.is_counts) throw std::runtime_error("read_counts_csv: file holds probabilities");
  CountTable t;
  t.family = h.family;
  if (auto it = h.meta.find("shots"); it != h.meta.end()) t.shots_per_config = std::stoll(it->second);
  if (auto it = h.meta.find("seed"); it != h.meta.end()) t.seed = std::stoull(it->second);
  if (auto it = h.meta.find("jitter_deg"); it != h.meta.end()) t.jitter_sigma_deg = std::stod(it->second);
  t.counts.assign(static_cast<size_t>(tomoset::family_size(t.family)), -1);
  std::string line, value;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    SettingIndex s = detail::parse_row(line, value);
    t.counts[static_cast<size_t>(tomoset::linear_index(s, t.family))] = std::stoll(value);
  }
  for (auto c : t.counts)
    if (c < 0) throw std::runtime_error("read_counts_csv: table incomplete for its family");
  return t;
}

inline ProbabilityTable read_probabilities_csv(std::istream& is) {
  auto h = detail::read_csv_header(is);
  if (h.is_counts) throw std::runtime_error("read_probabilities_csv: file holds counts");
  ProbabilityTable t;
  t.family = h.family;
  t.p = RVec::Constant(tomoset::family_size(t.family), -1.0);
  std::string line, value;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    SettingIndex s = detail::parse_row(line, value);
    t.p(tomoset::linear_index(s, t.family)) = std::stod(value);
  }
  if ((t.p.array() < 0.0).any())
    throw std::runtime_error("read_probabilities_csv: table incomplete for its family");
  return t;
}

}  // namespace switchtomo::simlab
