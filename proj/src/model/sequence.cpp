#include "objreason/model/sequence.hpp"

#include <cmath>

namespace objreason {

std::vector<ElementInfo> sequence_layout(int frames, int slots, int words) {
  std::vector<ElementInfo> out;
  out.reserve(static_cast<std::size_t>(frames * slots + words + 1));
  for (int t = 0; t < frames; ++t) {
    for (int i = 0; i < slots; ++i) out.push_back({Modality::Object, t, i, -1, t});
  }
  for (int k = 0; k < words; ++k) out.push_back({Modality::Word, -1, -1, k, frames + k});
  out.push_back({Modality::Cls, -1, -1, -1, frames + words});
  return out;
}

Matrix<double> relative_table(int max_position, int width) {
  const int rows = 2 * max_position - 1;
  Matrix<double> table(rows, width);
  for (int r = 0; r < rows; ++r) {
    const double offset = r - (max_position - 1);
    for (int k = 0; k < width; ++k) {
      const double freq = std::pow(10000.0, -2.0 * (k / 2) / width);
      table(r, k) = k % 2 == 0 ? std::sin(offset * freq) : std::cos(offset * freq);
    }
  }
  return table;
}

IndexMatrix relative_offsets(const std::vector<ElementInfo>& elements, int max_position) {
  const auto n = static_cast<Eigen::Index>(elements.size());
  IndexMatrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const int o = elements[static_cast<std::size_t>(i)].position - elements[static_cast<std::size_t>(j)].position;
      if (o <= -max_position || o >= max_position) {
        throw ConfigError("sequence positions exceed max_position " + std::to_string(max_position));
      }
      out(i, j) = o + max_position - 1;
    }
  }
  return out;
}

}  // namespace objreason
