#ifndef FOIL_NN_PARAMS_HPP
#define FOIL_NN_PARAMS_HPP

#include <string>
#include <vector>

#include "foil/types.hpp"

namespace foil::nn {

struct TensorSpec {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;  // 1 for vectors
  Eigen::Index offset = 0;
  Eigen::Index size() const { return rows * cols; }
};

/// Describes how a model's tensors pack into one flat parameter vector.
/// Gradients, Adam moments, and serialized files all share this layout,
/// so optimizer steps and parameter dumps are single-array operations.
class ParamLayout {
public:
  int add(std::string name, Eigen::Index rows, Eigen::Index cols = 1) {
    TensorSpec spec{std::move(name), rows, cols, total_};
    total_ += spec.size();
    specs_.push_back(std::move(spec));
    return static_cast<int>(specs_.size()) - 1;
  }

  Eigen::Index total() const { return total_; }
  const std::vector<TensorSpec>& specs() const { return specs_; }
  const TensorSpec& spec(int handle) const { return specs_.at(handle); }

private:
  std::vector<TensorSpec> specs_;
  Eigen::Index total_ = 0;
};

using MatView = Eigen::Map<Matrix>;
using ConstMatView = Eigen::Map<const Matrix>;
using VecView = Eigen::Map<Vector>;
using ConstVecView = Eigen::Map<const Vector>;

inline MatView mat(const ParamLayout& layout, Vector& buf, int handle) {
  const auto& s = layout.spec(handle);
  return MatView(buf.data() + s.offset, s.rows, s.cols);
}

inline ConstMatView mat(const ParamLayout& layout, const Vector& buf,
                        int handle) {
  const auto& s = layout.spec(handle);
  return ConstMatView(buf.data() + s.offset, s.rows, s.cols);
}

inline VecView vec(const ParamLayout& layout, Vector& buf, int handle) {
  const auto& s = layout.spec(handle);
  return VecView(buf.data() + s.offset, s.size());
}

inline ConstVecView vec(const ParamLayout& layout, const Vector& buf,
                        int handle) {
  const auto& s = layout.spec(handle);
  return ConstVecView(buf.data() + s.offset, s.size());
}

}  // namespace foil::nn

#endif
