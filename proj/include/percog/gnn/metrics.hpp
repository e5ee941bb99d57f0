#pragma once

#include <stdexcept>
#include <vector>

namespace percog::gnn {

struct UndefinedCorrelationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Pearson correlation coefficient Cov(f,y)/(sigma_f*sigma_y). Requires at
/// least two samples; zero variance in either argument raises
/// UndefinedCorrelationError (never a silent 0).
double pcc(const std::vector<double>& f, const std::vector<double>& y);

/// Mean accuracy 1 - mean|f_i - y_i| on [0,1]-normalized scores; values
/// outside [0,1] are an error.
double acc(const std::vector<double>& f, const std::vector<double>& y);

}  // namespace percog::gnn
