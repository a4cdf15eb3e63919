#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "angpool/cdf.hpp"

namespace angpool {

// CDF JSON schema: {"knots": [[x, p], ...]} at full precision.
std::string cdf_to_json(const PiecewiseLinearCdf& cdf);
PiecewiseLinearCdf cdf_from_json(const std::string& text);
PiecewiseLinearCdf load_cdf_file(const std::string& path);
void save_cdf_file(const PiecewiseLinearCdf& cdf, const std::string& path);

// Weights file: a JSON array of nonnegative numbers.
std::vector<double> load_weights_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace angpool
