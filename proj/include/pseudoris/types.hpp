#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "pseudoris/errors.hpp"

namespace pseudoris {

using TokenId = int;

// Ordered token inventory shared by a captioner and the code that renders
// its sequences as text. Token ids are positions in `tokens`.
struct Vocabulary {
  std::vector<std::string> tokens;
  TokenId bos_id = -1;
  TokenId eos_id = -1;

  int size() const { return static_cast<int>(tokens.size()); }

  const std::string& token(TokenId id) const { return tokens.at(id); }

  // Linear scan; vocabularies here are small. Returns -1 when absent.
  TokenId find(const std::string& tok) const {
    for (int i = 0; i < size(); ++i) {
      if (tokens[i] == tok) return i;
    }
    return -1;
  }

  void validate() const;
};

// Probability vector over a vocabulary.
struct WordDistribution {
  Eigen::VectorXd probs;

  int size() const { return static_cast<int>(probs.size()); }

  // Entries nonnegative, total mass 1 within 1e-6.
  bool valid() const {
    return probs.size() > 0 && (probs.array() >= 0.0).all() &&
           std::abs(probs.sum() - 1.0) < 1e-6;
  }
};

// Generated token ids. Excludes bos; a complete sequence ends with eos.
struct TokenSequence {
  std::vector<TokenId> ids;
  bool complete = false;

  bool operator==(const TokenSequence&) const = default;
};

// Renders ids as space-separated token text, skipping bos/eos.
std::string sequence_text(const TokenSequence& seq, const Vocabulary& vocab);

// Unit-norm feature vector produced by a captioner's visual encoder.
struct VisualEmbedding {
  Eigen::VectorXd vec;

  bool unit_norm(double tol = 1e-6) const {
    return std::abs(vec.norm() - 1.0) < tol;
  }
};

}  // namespace pseudoris
