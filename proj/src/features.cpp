#include "msface/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>

#include "msface/error.hpp"

namespace msface {

FrequencyStats compute_statistics(std::span<const TrainingSample> train) {
  if (train.empty()) fail(ErrorCode::EmptyTraining, "training set is empty");
  const std::size_t w = train.front().coefs->width();
  const std::size_t h = train.front().coefs->height();
  std::map<int, std::vector<const CoefMatrix*>> by_person;
  for (const auto& s : train) {
    if (s.coefs->width() != w || s.coefs->height() != h) {
      fail(ErrorCode::ShapeMismatch, "training coefficient matrices differ in shape");
    }
    by_person[s.person].push_back(s.coefs);
  }

  const std::size_t n = w * h;
  FrequencyStats st;
  st.width = w;
  st.height = h;
  st.mean.assign(n, 0.0);
  st.variance.assign(n, 0.0);
  st.intra.assign(n, 0.0);

  std::size_t total = 0;
  for (const auto& [person, mats] : by_person) {
    st.persons.push_back(person);
    st.images_per_person.push_back(static_cast<int>(mats.size()));
    total += mats.size();

    const double inv_f = 1.0 / static_cast<double>(mats.size());
    std::vector<double> mp(n, 0.0);
    for (const CoefMatrix* c : mats) {
      const auto vals = c->values().values();
      for (std::size_t i = 0; i < n; ++i) mp[i] += vals[i];
    }
    for (double& v : mp) v *= inv_f;
    std::vector<double> vp(n, 0.0);
    for (const CoefMatrix* c : mats) {
      const auto vals = c->values().values();
      for (std::size_t i = 0; i < n; ++i) {
        const double d = vals[i] - mp[i];
        vp[i] += d * d;
      }
    }
    for (double& v : vp) v *= inv_f;
    for (std::size_t i = 0; i < n; ++i) st.intra[i] += vp[i];
    st.person_mean.push_back(std::move(mp));
    st.person_variance.push_back(std::move(vp));
  }

  for (std::size_t p = 0; p < st.persons.size(); ++p) {
    const double weight = static_cast<double>(st.images_per_person[p]) / static_cast<double>(total);
    const auto& mp = st.person_mean[p];
    for (std::size_t i = 0; i < n; ++i) st.mean[i] += weight * mp[i];
  }
  for (const auto& [person, mats] : by_person) {
    for (const CoefMatrix* c : mats) {
      const auto vals = c->values().values();
      for (std::size_t i = 0; i < n; ++i) {
        const double d = vals[i] - st.mean[i];
        st.variance[i] += d * d;
      }
    }
  }
  const double inv_total = 1.0 / static_cast<double>(total);
  for (double& v : st.variance) v *= inv_total;
  st.inter = st.variance;
  return st;
}

FrequencyStats compute_statistics(std::span<const std::pair<int, CoefMatrix>> train) {
  std::vector<TrainingSample> refs;
  refs.reserve(train.size());
  for (const auto& [person, coefs] : train) refs.push_back({person, &coefs});
  return compute_statistics(std::span<const TrainingSample>(refs));
}

std::string_view to_string(FisherVariant v) noexcept {
  return v == FisherVariant::Literal ? "literal" : "variance-ratio";
}

FisherVariant parse_fisher_variant(std::string_view name) {
  if (name == "variance-ratio" || name == "ratio") return FisherVariant::VarianceRatio;
  if (name == "literal") return FisherVariant::Literal;
  fail(ErrorCode::InvalidArgument, "unknown discriminability variant '" + std::string(name) + "'");
}

DiscriminabilityMap fisher_map(const FrequencyStats& stats, FisherVariant variant) {
  DiscriminabilityMap map;
  map.width = stats.width;
  map.height = stats.height;
  map.variant = variant;
  const std::size_t n = stats.width * stats.height;
  map.score.assign(n, 0.0);
  if (variant == FisherVariant::VarianceRatio) {
    for (std::size_t i = 0; i < n; ++i) map.score[i] = stats.inter[i] / (stats.intra[i] + kFisherEpsilon);
    return map;
  }
  // m_intra is the unweighted mean of person means, m_inter the global mean.
  const double inv_p = 1.0 / static_cast<double>(stats.person_count());
  std::vector<double> m_intra(n, 0.0);
  for (const auto& mp : stats.person_mean) {
    for (std::size_t i = 0; i < n; ++i) m_intra[i] += inv_p * mp[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    map.score[i] = std::abs(m_intra[i] - stats.mean[i]) /
                   std::sqrt(stats.intra[i] + stats.inter[i] + kFisherEpsilon);
  }
  return map;
}

std::string SelectionMask::descriptor() const {
  return (mode == Mode::Square ? "square:" : "topk:") + std::to_string(size);
}

bool SelectionMask::contains(FreqPos p) const {
  return std::find(positions.begin(), positions.end(), p) != positions.end();
}

SelectionMask square_mask(std::size_t n, std::size_t width, std::size_t height) {
  if (n == 0 || n > std::min(width, height)) {
    fail(ErrorCode::BadDimension, "square window " + std::to_string(n) + " does not fit a " +
                                      std::to_string(width) + "x" + std::to_string(height) + " grid");
  }
  SelectionMask mask;
  mask.width = width;
  mask.height = height;
  mask.mode = SelectionMask::Mode::Square;
  mask.size = n;
  mask.positions.reserve(n * n);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t u = 0; u < n; ++u) mask.positions.push_back({u, v});
  }
  return mask;
}

SelectionMask top_k_mask(const DiscriminabilityMap& map, std::size_t k) {
  const std::size_t n = map.width * map.height;
  if (k == 0 || k > n) {
    fail(ErrorCode::BadDimension, "top-K size " + std::to_string(k) + " outside 1.." + std::to_string(n));
  }
  std::vector<FreqPos> all;
  all.reserve(n);
  for (std::size_t v = 0; v < map.height; ++v) {
    for (std::size_t u = 0; u < map.width; ++u) all.push_back({u, v});
  }
  const auto better = [&](const FreqPos& a, const FreqPos& b) {
    const double sa = map.at(a.u, a.v);
    const double sb = map.at(b.u, b.v);
    if (sa != sb) return sa > sb;
    if (a.u + a.v != b.u + b.v) return a.u + a.v < b.u + b.v;
    return a.u < b.u;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), better);
  all.resize(k);

  SelectionMask mask;
  mask.width = map.width;
  mask.height = map.height;
  mask.mode = SelectionMask::Mode::TopK;
  mask.size = k;
  mask.positions = std::move(all);
  return mask;
}

FeatureVector extract_features(const CoefMatrix& coefs, const SelectionMask& mask) {
  if (coefs.width() != mask.width || coefs.height() != mask.height) {
    fail(ErrorCode::ShapeMismatch, "mask grid " + std::to_string(mask.width) + "x" +
                                       std::to_string(mask.height) + " does not match coefficients " +
                                       std::to_string(coefs.width()) + "x" +
                                       std::to_string(coefs.height()));
  }
  FeatureVector fv;
  fv.provenance = mask.descriptor();
  fv.values.reserve(mask.positions.size());
  for (const auto& p : mask.positions) fv.values.push_back(coefs(p.u, p.v));
  return fv;
}

void export_map_csv(const DiscriminabilityMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot create " + path.string());
  out << "u,v,score\n";
  char buf[40];
  for (std::size_t v = 0; v < map.height; ++v) {
    for (std::size_t u = 0; u < map.width; ++u) {
      std::snprintf(buf, sizeof buf, "%.17g", map.at(u, v));
      out << u << ',' << v << ',' << buf << '\n';
    }
  }
}

void export_mask_csv(const SelectionMask& mask, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot create " + path.string());
  out << "rank,u,v\n";
  for (std::size_t i = 0; i < mask.positions.size(); ++i) {
    out << i + 1 << ',' << mask.positions[i].u << ',' << mask.positions[i].v << '\n';
  }
}

}  // namespace msface
