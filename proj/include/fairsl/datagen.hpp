#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "fairsl/database.hpp"

namespace fairsl {

struct GenParams {
  int n_papers = 100;
  int n_authors = 100;
  int n_reviewers = 30;
  int reviewers_per_paper = 2;
  double p_h = 0.5;  // top-rank affiliation
  double p_s = 0.5;  // student author
  double p_q = 0.5;  // high-quality paper
  double theta1 = 0.5;
  double theta2 = 0.9;
  double acceptable_flip = 0.1;
  bool emit_high_quality = true;
  std::uint64_t seed = 0;
};

void validate(const GenParams& params);

/// P(review positive | quality, top affiliation, student).
double review_probability(bool quality, bool top_affiliation, bool student, double theta1 = 0.5,
                          double theta2 = 0.9);

/// One sampled review with the parent values it was drawn from.
struct LatentReview {
  bool quality = false;
  bool top_affiliation = false;
  bool student = false;
  bool positive = false;
};

struct PaperReviewData {
  Dataset data;
  std::vector<LatentReview> reviews;
};

/// Samples the paper-review network. Observed: submits, student, acceptable,
/// reviews and (optionally) highQuality. Targets: positiveReviews and
/// positiveSummary, whose truth is the mean of the paper's reviews. Papers
/// by student authors form the protected group.
PaperReviewData generate_paper_review(const GenParams& params);

/// Manifest entries describing `params`.
std::vector<std::pair<std::string, std::string>> manifest_entries(const GenParams& params);

/// Uniform double in [0,1) from the top 53 bits of one draw.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace fairsl
