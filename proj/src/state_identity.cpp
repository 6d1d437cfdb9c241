#include "tide/state_identity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include <fmt/format.h>

#include "tide/error.hpp"

namespace tide {

StateIdentityConfig StateIdentityConfig::cosine(double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("cosine threshold must lie in (0, 1], got {}", threshold));
  }
  return {Mode::kCosine, threshold};
}

StateIdentityConfig StateIdentityConfig::parse(const std::string& text) {
  if (text == "exact") return exact();
  constexpr std::string_view kPrefix = "cosine:";
  if (text.rfind(kPrefix, 0) == 0) {
    const std::string number = text.substr(kPrefix.size());
    std::size_t consumed = 0;
    double theta = 0.0;
    try {
      theta = std::stod(number, &consumed);
    } catch (const std::exception&) {
      consumed = 0;
    }
    if (consumed == 0 || consumed != number.size()) {
      throw Error(ErrorCode::kInvalidArgument, "bad cosine threshold '" + number + "'");
    }
    return cosine(theta);
  }
  throw Error(ErrorCode::kInvalidArgument,
              "state identity must be 'exact' or 'cosine:THETA', got '" + text + "'");
}

std::string StateIdentityConfig::to_string() const {
  if (mode == Mode::kExact) return "exact";
  return fmt::format("cosine:{}", threshold);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw Error(ErrorCode::kDimensionMismatch,
                fmt::format("cannot compare vectors of dimension {} and {}", a.size(), b.size()));
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::kZeroNormVector, "zero-norm state vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

bool states_equal(const StateRepr& a, const StateRepr& b, const StateIdentityConfig& cfg) {
  if (cfg.mode == StateIdentityConfig::Mode::kExact) {
    if (a.kind() != b.kind()) return false;
    return a.is_text() ? a.as_text() == b.as_text() : a.as_vector() == b.as_vector();
  }
  if (!a.is_vector() || !b.is_vector()) {
    throw Error(ErrorCode::kSchemaViolation, "cosine state identity requires vector states");
  }
  const auto& va = a.as_vector();
  const auto& vb = b.as_vector();
  const double sim = cosine_similarity(va, vb);
  // cos(v, v) can round just below 1.0; identical payloads are always equal.
  if (va == vb) return true;
  return sim >= cfg.threshold;
}

namespace {

std::vector<std::size_t> exact_ids(std::span<const StateRepr> states) {
  std::vector<std::size_t> ids;
  ids.reserve(states.size());
  std::unordered_map<std::string, std::size_t> text_ids;
  std::map<std::vector<double>, std::size_t> vector_ids;
  std::size_t next = 0;
  for (const auto& s : states) {
    if (s.is_text()) {
      auto [it, inserted] = text_ids.try_emplace(s.as_text(), next);
      if (inserted) ++next;
      ids.push_back(it->second);
    } else {
      auto [it, inserted] = vector_ids.try_emplace(s.as_vector(), next);
      if (inserted) ++next;
      ids.push_back(it->second);
    }
  }
  return ids;
}

std::vector<std::size_t> cosine_ids(std::span<const StateRepr> states, const StateIdentityConfig& cfg) {
  struct Bucket {
    std::size_t representative;  // index of the most recent member
  };
  std::vector<Bucket> buckets;
  // Bucket ids ordered from most to least recently visited.
  std::vector<std::size_t> recency;
  std::vector<std::size_t> ids;
  ids.reserve(states.size());
  for (std::size_t t = 0; t < states.size(); ++t) {
    std::size_t chosen = buckets.size();
    for (std::size_t pos = 0; pos < recency.size(); ++pos) {
      const std::size_t b = recency[pos];
      if (states_equal(states[buckets[b].representative], states[t], cfg)) {
        chosen = b;
        recency.erase(recency.begin() + static_cast<std::ptrdiff_t>(pos));
        break;
      }
    }
    if (chosen == buckets.size()) {
      if (!states[t].is_vector()) {
        throw Error(ErrorCode::kSchemaViolation, "cosine state identity requires vector states");
      }
      buckets.push_back({t});
    }
    buckets[chosen].representative = t;
    recency.insert(recency.begin(), chosen);
    ids.push_back(chosen);
  }
  return ids;
}

}  // namespace

std::vector<std::size_t> assign_state_ids(std::span<const StateRepr> states,
                                          const StateIdentityConfig& cfg) {
  if (cfg.mode == StateIdentityConfig::Mode::kExact) return exact_ids(states);
  return cosine_ids(states, cfg);
}

}  // namespace tide
