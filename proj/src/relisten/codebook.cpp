// Copyright 2026, The ReListen Authors
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

#include "relisten/codebook.hpp"

#include <cmath>
#include <limits>

#include "relisten/error.hpp"
#include "relisten/rng.hpp"

namespace relisten {

namespace {

using MatD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename A, typename B>
double sq_dist(const A& a, const B& b) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const double d = static_cast<double>(a[k]) - static_cast<double>(b[k]);
    s += d * d;
  }
  return s;
}

}  // namespace

std::size_t quantize(std::span<const float> x, const Codebook& cb) {
  if (cb.size() == 0) fail(Errc::contract, "quantize: empty codebook");
  if (x.size() != cb.dim()) {
    fail(Errc::contract, "quantize: vector has " + std::to_string(x.size()) + " components, codebook " +
                             std::to_string(cb.dim()));
  }
  const Eigen::Map<const Eigen::VectorXf> v(x.data(), static_cast<Eigen::Index>(x.size()));
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < cb.size(); ++k) {
    const double d = sq_dist(cb.entries.row(static_cast<Eigen::Index>(k)), v);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

TrainResult train_codebook(const RowMatrix& data, std::size_t K, int max_iters, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(data.rows());
  const auto d = data.cols();
  if (K == 0) fail(Errc::contract, "train_codebook: K must be positive");
  if (n < K) {
    fail(Errc::contract, "train_codebook: " + std::to_string(n) + " vectors cannot seed K=" + std::to_string(K));
  }
  if (max_iters < 1) fail(Errc::parameter, "train_codebook: max_iters must be >= 1");
  if (!data.allFinite()) fail(Errc::numeric, "train_codebook: non-finite training data");

  const MatD x = data.cast<double>();
  MatD c(static_cast<Eigen::Index>(K), d);
  Rng rng(seed);

  // k-means++ seeding
  std::vector<double> dmin(n, std::numeric_limits<double>::infinity());
  std::size_t pick = static_cast<std::size_t>(rng.below(n));
  for (std::size_t k = 0; k < K; ++k) {
    c.row(static_cast<Eigen::Index>(k)) = x.row(static_cast<Eigen::Index>(pick));
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dmin[i] = std::min(dmin[i], sq_dist(x.row(static_cast<Eigen::Index>(i)), c.row(static_cast<Eigen::Index>(k))));
      total += dmin[i];
    }
    if (k + 1 == K) break;
    if (total <= 0.0) {
      pick = static_cast<std::size_t>(rng.below(n));
      continue;
    }
    const double r = rng.uniform() * total;
    double acc = 0.0;
    pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      acc += dmin[i];
      if (acc > r && dmin[i] > 0.0) {
        pick = i;
        break;
      }
    }
  }

  TrainResult res;
  std::vector<std::size_t> assign(n, K);
  std::vector<double> dist(n, 0.0);
  for (int it = 0; it < max_iters; ++it) {
    bool changed = false;
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < K; ++k) {
        const double dd = sq_dist(x.row(static_cast<Eigen::Index>(i)), c.row(static_cast<Eigen::Index>(k)));
        if (dd < best_d) {
          best_d = dd;
          best = k;
        }
      }
      changed = changed || best != assign[i];
      assign[i] = best;
      dist[i] = best_d;
      err += best_d;
    }
    res.errors.push_back(err);
    res.iterations = it + 1;
    if (!changed) {
      res.converged = true;
      break;
    }

    MatD sum = MatD::Zero(static_cast<Eigen::Index>(K), d);
    std::vector<std::size_t> count(K, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sum.row(static_cast<Eigen::Index>(assign[i])) += x.row(static_cast<Eigen::Index>(i));
      ++count[assign[i]];
    }
    for (std::size_t k = 0; k < K; ++k) {
      if (count[k] > 0) c.row(static_cast<Eigen::Index>(k)) = sum.row(static_cast<Eigen::Index>(k)) / static_cast<double>(count[k]);
    }
    // Empty clusters take the point currently farthest from its centroid.
    for (std::size_t k = 0; k < K; ++k) {
      if (count[k] != 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double dd = sq_dist(x.row(static_cast<Eigen::Index>(i)), c.row(static_cast<Eigen::Index>(assign[i])));
        if (dd > far_d) {
          far_d = dd;
          far = i;
        }
      }
      c.row(static_cast<Eigen::Index>(k)) = x.row(static_cast<Eigen::Index>(far));
      --count[assign[far]];
      assign[far] = k;
      count[k] = 1;
    }
  }
  res.codebook.entries = c.cast<float>();
  return res;
}

}  // namespace relisten
