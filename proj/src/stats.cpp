/*
 * Copyright 2026 The twec-metaphor Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "twec/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <tuple>

#include "twec/csv.hpp"

namespace twec {

Summary describe(std::span<const std::optional<double>> values) {
  Summary s;
  double sum = 0.0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++s.n_present;
    } else {
      ++s.n_missing;
    }
  }
  if (s.n_present == 0) return s;
  const double mean = sum / static_cast<double>(s.n_present);
  s.mean = mean;
  if (s.n_present < 2) return s;
  double ss = 0.0;
  for (const auto& v : values)
    if (v) ss += (*v - mean) * (*v - mean);
  s.sd = std::sqrt(ss / static_cast<double>(s.n_present - 1));
  return s;
}

Summary describe(std::span<const double> values) {
  std::vector<std::optional<double>> v(values.begin(), values.end());
  return describe(v);
}

// ---------------------------------------------------------------------------
// t distribution

namespace {

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  throw std::runtime_error("incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw ValidationError("incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double front =
      std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

namespace {

// P(|T| >= |t|)
double t_two_sided(double t, double df) {
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

}  // namespace

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw ValidationError("degrees of freedom must be positive");
  const double tail = 0.5 * t_two_sided(t, df);
  return t > 0.0 ? 1.0 - tail : tail;
}

// ---------------------------------------------------------------------------

PearsonResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("pearson: sequences differ in length");
  const std::size_t n = x.size();
  if (n < 3) throw InsufficientData("pearson needs at least 3 complete pairs, got " + std::to_string(n));
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedStatistic("pearson: zero variance");
  PearsonResult out;
  out.n = n;
  out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(n - 2);
  const double one_minus = 1.0 - out.r * out.r;
  if (one_minus <= 0.0) {
    out.p = 0.0;
  } else {
    out.p = std::clamp(t_two_sided(out.r * std::sqrt(df / one_minus), df), 0.0, 1.0);
  }
  return out;
}

PearsonResult pearson(std::span<const std::optional<double>> x, std::span<const std::optional<double>> y) {
  if (x.size() != y.size()) throw ValidationError("pearson: sequences differ in length");
  std::vector<double> a, b;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] && y[i]) {
      a.push_back(*x[i]);
      b.push_back(*y[i]);
    }
  return pearson(std::span<const double>(a), std::span<const double>(b));
}

namespace {

void check_p(std::span<const double> p) {
  for (double v : p)
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("p-values must lie in [0, 1]");
}

}  // namespace

std::vector<double> holm_adjust(std::span<const double> p) {
  check_p(p);
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  std::vector<double> out(m);
  double running = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double adj = std::min(1.0, p[order[i]] * static_cast<double>(m - i));
    running = std::max(running, adj);
    out[order[i]] = running;
  }
  return out;
}

std::vector<double> bonferroni_adjust(std::span<const double> p) {
  check_p(p);
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = std::min(1.0, p[i] * static_cast<double>(p.size()));
  return out;
}

Correction parse_correction(const std::string& text) {
  if (text == "holm") return Correction::Holm;
  if (text == "bonferroni") return Correction::Bonferroni;
  throw ValidationError("correction must be 'holm' or 'bonferroni', got '" + text + "'");
}

// ---------------------------------------------------------------------------
// Analysis table

std::optional<double> analysis_value(const AnalysisRow& row, const std::string& variable) {
  if (variable == "cs") return row.cs;
  if (variable == "snd_topic") return row.snd_topic;
  if (variable == "snd_vehicle") return row.snd_vehicle;
  if (variable == "vc_topic") return row.vc_topic;
  if (variable == "vc_vehicle") return row.vc_vehicle;
  if (variable == "freq_topic") return row.freq_topic;
  if (variable == "freq_vehicle") return row.freq_vehicle;
  throw ValidationError("unknown measure '" + variable + "'");
}

std::vector<AnalysisRow> build_analysis_table(const std::vector<MeasureRecord>& measures,
                                              const std::vector<CoherenceRecord>& coherence,
                                              const std::vector<Metaphor>& metaphors) {
  std::map<std::string, const Metaphor*> by_id;
  for (const auto& m : metaphors) by_id.emplace(m.id, &m);
  std::map<std::tuple<std::string, Role, std::string>, std::optional<double>> vc;
  for (const auto& c : coherence) vc[{c.word, c.role, c.genre}] = c.vc;

  auto join = [&](const std::string& word, Role role, const SliceId& slice, bool present,
                  const std::string& id) -> std::optional<double> {
    auto it = vc.find({word, role, slice.genre});
    if (it != vc.end()) return it->second;
    if (present)
      throw DataError("no coherence record for " + to_string(role) + " '" + word + "' in genre " + slice.genre +
                      " (metaphor " + id + ")");
    return std::nullopt;
  };

  std::vector<AnalysisRow> out;
  out.reserve(measures.size());
  for (const auto& r : measures) {
    auto it = by_id.find(r.metaphor_id);
    if (it == by_id.end()) throw DataError("measure row for unknown metaphor id '" + r.metaphor_id + "'");
    const Metaphor& m = *it->second;
    AnalysisRow a;
    a.metaphor_id = r.metaphor_id;
    a.slice = r.slice;
    a.cs = r.cs;
    a.snd_topic = r.snd_topic;
    a.snd_vehicle = r.snd_vehicle;
    a.freq_topic = r.freq_topic;
    a.freq_vehicle = r.freq_vehicle;
    a.vc_topic = join(m.topic, Role::Topic, r.slice, r.snd_topic.has_value(), m.id);
    a.vc_vehicle = join(m.vehicle, Role::Vehicle, r.slice, r.snd_vehicle.has_value(), m.id);
    out.push_back(std::move(a));
  }
  return out;
}

void write_analysis_table(std::ostream& out, const std::vector<AnalysisRow>& rows) {
  write_csv_row(out, kAnalysisHeader);
  for (const auto& r : rows)
    write_csv_row(out, {r.metaphor_id, r.slice.epoch, r.slice.genre, format_measure(r.cs),
                        format_measure(r.snd_topic), format_measure(r.snd_vehicle), format_measure(r.vc_topic),
                        format_measure(r.vc_vehicle), format_measure(r.freq_topic), format_measure(r.freq_vehicle)});
}

std::vector<AnalysisRow> read_analysis_table(std::istream& in, const std::string& source) {
  const auto table = CsvTable::read(in, source);
  table.expect_header(kAnalysisHeader);
  std::vector<AnalysisRow> out;
  for (std::size_t i = 0; i < table.rows().size(); ++i) {
    const auto& row = table.rows()[i];
    const std::string where = source + ":" + std::to_string(table.line_of(i));
    AnalysisRow a;
    a.metaphor_id = row[0];
    a.slice = SliceId{row[1], row[2]};
    a.cs = parse_measure(row[3], where);
    a.snd_topic = parse_measure(row[4], where);
    a.snd_vehicle = parse_measure(row[5], where);
    a.vc_topic = parse_measure(row[6], where);
    a.vc_vehicle = parse_measure(row[7], where);
    a.freq_topic = parse_measure(row[8], where);
    a.freq_vehicle = parse_measure(row[9], where);
    out.push_back(std::move(a));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

bool is_vc(const std::string& variable) { return variable.rfind("vc_", 0) == 0; }

std::vector<SliceId> slices_in_order(const std::vector<AnalysisRow>& rows) {
  std::vector<SliceId> out;
  for (const auto& r : rows)
    if (std::find(out.begin(), out.end(), r.slice) == out.end()) out.push_back(r.slice);
  return out;
}

std::vector<std::string> genres_in_order(const std::vector<AnalysisRow>& rows) {
  std::vector<std::string> out;
  for (const auto& r : rows)
    if (std::find(out.begin(), out.end(), r.slice.genre) == out.end()) out.push_back(r.slice.genre);
  return out;
}

std::vector<std::optional<double>> slice_column(const std::vector<AnalysisRow>& rows, const SliceId& slice,
                                                const std::string& variable) {
  std::vector<std::optional<double>> out;
  for (const auto& r : rows)
    if (r.slice == slice) out.push_back(analysis_value(r, variable));
  return out;
}

// One value per metaphor: VC does not vary across the epochs of a genre.
std::vector<std::optional<double>> genre_column(const std::vector<AnalysisRow>& rows, const std::string& genre,
                                                const std::string& variable) {
  std::vector<std::optional<double>> out;
  std::set<std::string> seen;
  for (const auto& r : rows)
    if (r.slice.genre == genre && seen.insert(r.metaphor_id).second) out.push_back(analysis_value(r, variable));
  return out;
}

}  // namespace

std::vector<DescriptiveRow> descriptives(const std::vector<AnalysisRow>& rows) {
  if (rows.empty()) throw ValidationError("descriptives of an empty table");
  std::vector<DescriptiveRow> out;
  for (const auto& variable : kAnalysisVariables) {
    if (is_vc(variable)) {
      for (const auto& g : genres_in_order(rows))
        out.push_back({variable, "all", g, describe(genre_column(rows, g, variable))});
    } else {
      for (const auto& s : slices_in_order(rows))
        out.push_back({variable, s.epoch, s.genre, describe(slice_column(rows, s, variable))});
    }
  }
  return out;
}

std::vector<CorrelationCell> correlation_matrix(const std::vector<AnalysisRow>& rows,
                                                const std::vector<std::string>& variables, Correction correction,
                                                double alpha) {
  if (variables.size() < 2) throw ValidationError("correlation matrix needs at least two variables");
  for (const auto& v : variables) (void)analysis_value(AnalysisRow{}, v);

  std::vector<CorrelationCell> cells;
  std::vector<std::size_t> tested;  // indices of upper-triangle cells with a defined test
  const std::size_t k = variables.size();
  for (const auto& slice : slices_in_order(rows)) {
    std::vector<std::vector<std::optional<double>>> cols;
    for (const auto& v : variables) cols.push_back(slice_column(rows, slice, v));
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b) {
        CorrelationCell c{slice.epoch, slice.genre, variables[a], variables[b], {}, {}, {}, 0, {}};
        std::size_t both = 0;
        for (std::size_t i = 0; i < cols[a].size(); ++i)
          if (cols[a][i] && cols[b][i]) ++both;
        c.n_pairs = both;
        if (a == b) {
          c.r = 1.0;
        } else if (a < b) {
          try {
            const auto res = pearson(std::span<const std::optional<double>>(cols[a]),
                                     std::span<const std::optional<double>>(cols[b]));
            c.r = res.r;
            c.p_raw = res.p;
            tested.push_back(cells.size());
          } catch (const UndefinedStatistic&) {
          }
        }
        cells.push_back(std::move(c));
      }
  }

  std::vector<double> raw;
  for (std::size_t i : tested) raw.push_back(*cells[i].p_raw);
  const auto adj = correction == Correction::Holm ? holm_adjust(raw) : bonferroni_adjust(raw);
  for (std::size_t j = 0; j < tested.size(); ++j) {
    auto& c = cells[tested[j]];
    c.p_adjusted = adj[j];
    c.significant = adj[j] < alpha;
  }

  // Mirror the upper triangle into the lower one.
  for (std::size_t start = 0; start < cells.size(); start += k * k)
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < a; ++b) {
        const auto& up = cells[start + b * k + a];
        auto& low = cells[start + a * k + b];
        low.r = up.r;
        low.p_raw = up.p_raw;
        low.p_adjusted = up.p_adjusted;
        low.significant = up.significant;
      }
  return cells;
}

std::vector<HistogramBin> histogram(std::span<const std::optional<double>> values, std::size_t bins) {
  if (bins < 1) throw ValidationError("histogram needs at least one bin");
  std::vector<double> xs;
  for (const auto& v : values)
    if (v) xs.push_back(*v);
  if (xs.empty()) throw UndefinedStatistic("histogram of all-NA input");
  const auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
  const double lo = *lo_it, hi = *hi_it;
  const double n = static_cast<double>(xs.size());
  if (lo == hi) {
    const double pad = std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(lo));
    const double width = 2.0 * pad;
    return {{lo - pad, hi + pad, xs.size(), 1.0 / width}};
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<HistogramBin> out(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    out[i].left = lo + width * static_cast<double>(i);
    out[i].right = i + 1 == bins ? hi : lo + width * static_cast<double>(i + 1);
  }
  for (double x : xs) {
    auto i = static_cast<std::size_t>((x - lo) / width);
    if (i >= bins) i = bins - 1;
    ++out[i].count;
  }
  for (auto& b : out) b.density = static_cast<double>(b.count) / (n * (b.right - b.left));
  return out;
}

std::vector<HistogramRow> histograms(const std::vector<AnalysisRow>& rows, std::size_t bins) {
  std::vector<HistogramRow> out;
  auto emit = [&](const std::string& variable, const std::string& epoch, const std::string& genre,
                  const std::vector<std::optional<double>>& col) {
    if (std::none_of(col.begin(), col.end(), [](const auto& v) { return v.has_value(); })) return;
    for (const auto& b : histogram(col, bins)) out.push_back({variable, epoch, genre, b});
  };
  for (const auto& variable : kAnalysisVariables) {
    if (is_vc(variable)) {
      for (const auto& g : genres_in_order(rows)) emit(variable, "all", g, genre_column(rows, g, variable));
    } else {
      for (const auto& s : slices_in_order(rows)) emit(variable, s.epoch, s.genre, slice_column(rows, s, variable));
    }
  }
  return out;
}

namespace {

std::string format_flag(std::optional<bool> b) {
  if (!b) return "NA";
  return *b ? "true" : "false";
}

}  // namespace

void write_descriptives(std::ostream& out, const std::vector<DescriptiveRow>& rows) {
  write_csv_row(out, kDescriptivesHeader);
  for (const auto& r : rows)
    write_csv_row(out, {r.measure, r.epoch, r.genre, format_measure(r.summary.mean), format_measure(r.summary.sd),
                        std::to_string(r.summary.n_present), std::to_string(r.summary.n_missing)});
}

void write_correlations(std::ostream& out, const std::vector<CorrelationCell>& cells) {
  write_csv_row(out, kCorrelationsHeader);
  for (const auto& c : cells)
    write_csv_row(out, {c.epoch, c.genre, c.var_a, c.var_b, format_measure(c.r), format_measure(c.p_raw),
                        format_measure(c.p_adjusted), std::to_string(c.n_pairs), format_flag(c.significant)});
}

void write_histograms(std::ostream& out, const std::vector<HistogramRow>& rows) {
  write_csv_row(out, kHistogramsHeader);
  for (const auto& r : rows)
    write_csv_row(out, {r.variable, r.epoch, r.genre, format_measure(r.bin.left), format_measure(r.bin.right),
                        std::to_string(r.bin.count), format_measure(r.bin.density)});
}

}  // namespace twec
