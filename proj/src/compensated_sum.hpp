#ifndef APELOSS_SRC_COMPENSATED_SUM_HPP_
#define APELOSS_SRC_COMPENSATED_SUM_HPP_

#include <cmath>

namespace apeloss::detail {

// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  void merge(const CompensatedSum& other) {
    add(other.sum_);
    add(other.comp_);
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace apeloss::detail

#endif  // APELOSS_SRC_COMPENSATED_SUM_HPP_
