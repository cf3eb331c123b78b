#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "mfilgn/errors.hpp"
#include "mfilgn/regression.hpp"

namespace mfilgn {
namespace {

constexpr std::string_view kMagic = "mfilgn-svr-model";

std::string fmt_number(double v) { return fmt::format("{:.17g}", v); }

std::string join_numbers(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ' ';
    out += fmt_number(values[i]);
  }
  return out;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) ++pos;
    const std::size_t start = pos;
    while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t' && line[pos] != '\r') ++pos;
    if (pos > start) tokens.push_back(line.substr(start, pos - start));
  }
  return tokens;
}

class ModelReader {
 public:
  explicit ModelReader(std::istream& in) : in_(in) {}

  /// Next line's tokens, which must start with `key`. Returns the values.
  std::vector<std::string_view> expect(const std::string& key) {
    if (!std::getline(in_, line_)) {
      throw ParseError(key, fmt::format("unexpected end of file (line {})", line_no_ + 1));
    }
    ++line_no_;
    auto tokens = split_ws(line_);
    if (tokens.empty() || tokens.front() != key) {
      throw ParseError(key, fmt::format("line {}: expected '{}'", line_no_, key));
    }
    tokens.erase(tokens.begin());
    return tokens;
  }

  double number(std::string_view token, const std::string& field) const {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw ParseError(field, fmt::format("line {}: '{}' is not a number", line_no_, token));
    }
    return v;
  }

  std::size_t count(std::string_view token, const std::string& field) const {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw ParseError(field, fmt::format("line {}: '{}' is not a count", line_no_, token));
    }
    return v;
  }

  double scalar(const std::string& key) {
    const auto values = expect(key);
    if (values.size() != 1) {
      throw ParseError(key, fmt::format("line {}: expected one value", line_no_));
    }
    return number(values[0], key);
  }

  std::vector<double> vector(const std::string& key, std::size_t expected) {
    const auto values = expect(key);
    if (values.size() != expected) {
      throw ParseError(key, fmt::format("line {}: expected {} values, found {}", line_no_, expected,
                                        values.size()));
    }
    std::vector<double> out;
    out.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      out.push_back(number(values[i], fmt::format("{}[{}]", key, i)));
    }
    return out;
  }

  std::size_t line_no() const { return line_no_; }

 private:
  std::istream& in_;
  std::string line_;
  std::size_t line_no_ = 0;
};

}  // namespace

void save_model(const RegressionModel& model, std::ostream& out) {
  model.validate();
  out << kMagic << '\n';
  out << "version " << RegressionModel::kFormatVersion << '\n';
  out << "kernel rbf\n";
  out << "feature_dim " << model.feature_dim() << '\n';
  out << "gamma " << fmt_number(model.kernel_gamma) << '\n';
  out << "c " << fmt_number(model.cost_c) << '\n';
  out << "epsilon " << fmt_number(model.epsilon_tube) << '\n';
  out << "bias " << fmt_number(model.bias) << '\n';
  out << "scaler_min " << join_numbers(model.scaler.min) << '\n';
  out << "scaler_max " << join_numbers(model.scaler.max) << '\n';
  out << "n_sv " << model.dual_coefficients.size() << '\n';
  for (std::size_t i = 0; i < model.dual_coefficients.size(); ++i) {
    out << "sv " << fmt_number(model.dual_coefficients[i]);
    for (double v : model.support_vectors.row(i)) out << ' ' << fmt_number(v);
    out << '\n';
  }
  out << "end\n";
  if (!out) throw IoError("failed writing model");
}

std::string save_model(const RegressionModel& model) {
  std::ostringstream out;
  save_model(model, out);
  return out.str();
}

RegressionModel load_model(std::istream& in) {
  ModelReader reader(in);
  std::string magic;
  if (!std::getline(in, magic) || split_ws(magic).size() != 1 || split_ws(magic)[0] != kMagic) {
    throw ParseError("", "not an mfilgn SVR model file");
  }
  const auto version_tokens = reader.expect("version");
  if (version_tokens.size() != 1 ||
      reader.count(version_tokens[0], "version") != static_cast<std::size_t>(RegressionModel::kFormatVersion)) {
    throw ParseError("version", fmt::format("unsupported model version (expected {})",
                                            RegressionModel::kFormatVersion));
  }
  const auto kernel = reader.expect("kernel");
  if (kernel.size() != 1 || kernel[0] != "rbf") throw ParseError("kernel", "only 'rbf' is supported");

  const auto dim_tokens = reader.expect("feature_dim");
  if (dim_tokens.size() != 1) throw ParseError("feature_dim", "expected one value");
  const std::size_t dim = reader.count(dim_tokens[0], "feature_dim");

  RegressionModel model;
  model.kernel_gamma = reader.scalar("gamma");
  model.cost_c = reader.scalar("c");
  model.epsilon_tube = reader.scalar("epsilon");
  model.bias = reader.scalar("bias");
  model.scaler.min = reader.vector("scaler_min", dim);
  model.scaler.max = reader.vector("scaler_max", dim);

  const auto nsv_tokens = reader.expect("n_sv");
  if (nsv_tokens.size() != 1) throw ParseError("n_sv", "expected one value");
  const std::size_t n_sv = reader.count(nsv_tokens[0], "n_sv");

  // Read every row before checking widths so a truncated file reports the
  // missing trailer rather than a short last row.
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  rows.reserve(n_sv);
  for (std::size_t i = 0; i < n_sv; ++i) {
    const auto tokens = reader.expect("sv");
    rows.emplace_back(reader.line_no(), std::vector<std::string>(tokens.begin(), tokens.end()));
  }
  if (!reader.expect("end").empty()) throw ParseError("end", "unexpected values after 'end'");

  model.support_vectors = Matrix(0, dim);
  model.dual_coefficients.reserve(n_sv);
  for (std::size_t i = 0; i < n_sv; ++i) {
    const std::string field = fmt::format("sv[{}]", i);
    const auto& [line, tokens] = rows[i];
    if (tokens.size() != dim + 1) {
      throw ValidationError(fmt::format(
          "{}: line {}: support vector has {} components but feature_dim is {}", field, line,
          tokens.empty() ? 0 : tokens.size() - 1, dim));
    }
    model.dual_coefficients.push_back(reader.number(tokens[0], field + ".coef"));
    std::vector<double> row(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      row[k] = reader.number(tokens[k + 1], fmt::format("{}[{}]", field, k));
    }
    model.support_vectors.append_row(row);
  }
  model.validate();
  return model;
}

RegressionModel load_model_string(const std::string& text) {
  std::istringstream in(text);
  return load_model(in);
}

}  // namespace mfilgn
