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

#ifndef TWEC_STATS_HPP
#define TWEC_STATS_HPP

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twec/error.hpp"
#include "twec/measures.hpp"
#include "twec/metaphors.hpp"

namespace twec {

/// Fewer than three pairwise-complete observations.
class InsufficientData : public UndefinedStatistic {
 public:
  using UndefinedStatistic::UndefinedStatistic;
};

struct Summary {
  std::optional<double> mean;
  std::optional<double> sd;  // sample SD, n-1 denominator; NA below two values
  std::size_t n_present = 0;
  std::size_t n_missing = 0;
};

Summary describe(std::span<const std::optional<double>> values);
Summary describe(std::span<const double> values);

struct PearsonResult {
  double r = 0.0;
  double p = 1.0;  // two-sided
  std::size_t n = 0;
};

/// Product-moment r over complete pairs; p from Student's t with n-2 df.
PearsonResult pearson(std::span<const double> x, std::span<const double> y);
PearsonResult pearson(std::span<const std::optional<double>> x, std::span<const std::optional<double>> y);

/// Regularised incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);
/// P(T <= t) for Student's t with df degrees of freedom.
double student_t_cdf(double t, double df);

std::vector<double> holm_adjust(std::span<const double> p);
std::vector<double> bonferroni_adjust(std::span<const double> p);

enum class Correction { Holm, Bonferroni };
Correction parse_correction(const std::string& text);

// ---------------------------------------------------------------------------
// Analysis table: one row per metaphor x slice, VC joined by genre.

struct AnalysisRow {
  std::string metaphor_id;
  SliceId slice;
  std::optional<double> cs;
  std::optional<double> snd_topic;
  std::optional<double> snd_vehicle;
  std::optional<double> vc_topic;
  std::optional<double> vc_vehicle;
  std::optional<double> freq_topic;
  std::optional<double> freq_vehicle;
};

inline const std::vector<std::string> kAnalysisHeader = {"metaphor_id", "epoch",       "genre",
                                                         "cs",          "snd_topic",   "snd_vehicle",
                                                         "vc_topic",    "vc_vehicle",  "freq_topic",
                                                         "freq_vehicle"};

/// Measure columns of AnalysisRow in output order.
inline const std::vector<std::string> kAnalysisVariables = {"cs",       "snd_topic",  "snd_vehicle", "vc_topic",
                                                            "vc_vehicle", "freq_topic", "freq_vehicle"};
std::optional<double> analysis_value(const AnalysisRow& row, const std::string& variable);

/// Throws DataError when a word that is present in a slice has no coherence
/// record for that slice's genre.
std::vector<AnalysisRow> build_analysis_table(const std::vector<MeasureRecord>& measures,
                                              const std::vector<CoherenceRecord>& coherence,
                                              const std::vector<Metaphor>& metaphors);

void write_analysis_table(std::ostream& out, const std::vector<AnalysisRow>& rows);
std::vector<AnalysisRow> read_analysis_table(std::istream& in, const std::string& source = "<analysis>");

// ---------------------------------------------------------------------------

struct DescriptiveRow {
  std::string measure;
  std::string epoch;  // "all" for VC, which spans the epochs of a genre
  std::string genre;
  Summary summary;
};

/// Slice-level measures per slice; VC per genre with one value per metaphor.
std::vector<DescriptiveRow> descriptives(const std::vector<AnalysisRow>& rows);

struct CorrelationCell {
  std::string epoch;
  std::string genre;
  std::string var_a;
  std::string var_b;
  std::optional<double> r;
  std::optional<double> p_raw;
  std::optional<double> p_adjusted;
  std::size_t n_pairs = 0;
  std::optional<bool> significant;  // NA on the diagonal and for undefined cells
};

/// Full symmetric matrix per slice. The adjustment family is every defined
/// upper-triangle test across all slices.
std::vector<CorrelationCell> correlation_matrix(const std::vector<AnalysisRow>& rows,
                                                const std::vector<std::string>& variables,
                                                Correction correction = Correction::Holm, double alpha = 0.05);

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  std::size_t count = 0;
  double density = 0.0;
};

/// Equal-width bins over [min, max]; NA skipped. Identical values collapse to
/// one bin widened by machine epsilon.
std::vector<HistogramBin> histogram(std::span<const std::optional<double>> values, std::size_t bins);

struct HistogramRow {
  std::string variable;
  std::string epoch;
  std::string genre;
  HistogramBin bin;
};

std::vector<HistogramRow> histograms(const std::vector<AnalysisRow>& rows, std::size_t bins);

inline const std::vector<std::string> kDescriptivesHeader = {"measure",   "epoch", "genre",    "mean",
                                                             "sd",        "n_present", "n_missing"};
inline const std::vector<std::string> kCorrelationsHeader = {"epoch", "genre",      "var_a",   "var_b",      "r",
                                                             "p_raw", "p_adjusted", "n_pairs", "significant"};
inline const std::vector<std::string> kHistogramsHeader = {"variable", "epoch", "genre",  "bin_left",
                                                           "bin_right", "count", "density"};

void write_descriptives(std::ostream& out, const std::vector<DescriptiveRow>& rows);
void write_correlations(std::ostream& out, const std::vector<CorrelationCell>& cells);
void write_histograms(std::ostream& out, const std::vector<HistogramRow>& rows);

}  // namespace twec

#endif  // TWEC_STATS_HPP
