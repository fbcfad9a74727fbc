#include "robising/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace robising {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot write '" + path + "'");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot read '" + path + "'");
  return in;
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

nlohmann::json model_to_json(const IsingParameters& params) {
  const Index d = params.dim();
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < d; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index j = 0; j < d; ++j) row.push_back(params.interaction()(i, j));
    rows.push_back(std::move(row));
  }
  nlohmann::json field = nlohmann::json::array();
  for (Index i = 0; i < d; ++i) field.push_back(params.field()(i));
  return {{"d", d}, {"interaction", rows}, {"field", field}};
}

IsingParameters model_from_json(const nlohmann::json& j) {
  try {
    const Index d = j.at("d").get<Index>();
    if (d < 1) throw ParameterError("model d must be positive");
    const auto& rows = j.at("interaction");
    if (!rows.is_array() || static_cast<Index>(rows.size()) != d) throw ParameterError("interaction must be d x d");
    MatrixXd theta(d, d);
    for (Index i = 0; i < d; ++i) {
      const auto& row = rows.at(static_cast<std::size_t>(i));
      if (!row.is_array() || static_cast<Index>(row.size()) != d) throw ParameterError("interaction must be d x d");
      for (Index c = 0; c < d; ++c) theta(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    VectorXd field = VectorXd::Zero(d);
    if (j.contains("field")) {
      const auto& f = j.at("field");
      if (!f.is_array() || static_cast<Index>(f.size()) != d) throw ParameterError("field must have length d");
      for (Index i = 0; i < d; ++i) field(i) = f.at(static_cast<std::size_t>(i)).get<double>();
    }
    if (!theta.allFinite() || !field.allFinite()) throw ParameterError("model entries must be finite");
    if ((theta - theta.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw ParameterError("interaction is not symmetric");
    if (theta.diagonal().cwiseAbs().maxCoeff() > 1e-12) throw ParameterError("interaction diagonal must be zero");
    MatrixXd sym = (theta + theta.transpose()) / 2.0;
    sym.diagonal().setZero();
    return IsingParameters(std::move(sym), std::move(field));
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("malformed model JSON: ") + e.what());
  }
}

nlohmann::json load_json(const std::string& path) {
  auto in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError("malformed JSON in '" + path + "': " + e.what());
  }
}

void save_json(const nlohmann::json& j, const std::string& path) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

IsingParameters load_model(const std::string& path) { return model_from_json(load_json(path)); }

void save_model(const IsingParameters& params, const std::string& path) {
  save_json(model_to_json(params), path);
}

SampleSet read_samples(const std::string& path) {
  auto in = open_in(path);
  std::vector<std::int8_t> values;
  Index width = -1;
  Index declared = -1;
  Index rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("d=");
      if (pos != std::string::npos) declared = std::stol(line.substr(pos + 2));
      continue;
    }
    std::stringstream fields(line);
    std::string cell;
    Index count = 0;
    while (std::getline(fields, cell, ',')) {
      if (cell == "1") {
        values.push_back(1);
      } else if (cell == "-1") {
        values.push_back(-1);
      } else {
        throw DomainError("sample entry '" + cell + "' is not 1 or -1");
      }
      ++count;
    }
    if (width < 0) width = count;
    if (count != width) throw ParameterError("sample rows have different lengths");
    ++rows;
  }
  if (rows == 0 || width < 1) throw ParameterError("no samples in '" + path + "'");
  if (declared >= 0 && declared != width) throw ParameterError("header d does not match the rows");
  SampleSet out(rows, width);
  std::copy(values.begin(), values.end(), out.data());
  return out;
}

void write_samples(const SampleSet& samples, const std::string& path, std::optional<std::uint64_t> seed) {
  auto out = open_out(path);
  out << "# d=" << samples.cols();
  if (seed) out << " seed=" << *seed;
  out << '\n';
  std::string line;
  for (Index r = 0; r < samples.rows(); ++r) {
    line.clear();
    for (Index c = 0; c < samples.cols(); ++c) {
      if (c) line += ',';
      line += samples(r, c) > 0 ? "1" : "-1";
    }
    out << line << '\n';
  }
}

void write_trace(const RefinementTrace& trace, const std::string& path) {
  auto out = open_out(path);
  out << "k,tau_k,mass_removed,cov_gap,wall_ms\n";
  for (const auto& row : trace.rounds) {
    out << row.k << ',' << format_double(row.tau) << ',' << format_double(row.filter.massRemoved) << ','
        << (std::isnan(row.covGap) ? std::string() : format_double(row.covGap)) << ','
        << format_double(row.wallMs) << '\n';
  }
}

void write_moments(const VectorXd& mean, const MatrixXd& cov, const std::string& path) {
  auto out = open_out(path);
  auto row = [&](const auto& v) {
    for (Index i = 0; i < v.size(); ++i) out << (i ? "," : "") << format_double(v(i));
    out << '\n';
  };
  row(mean);
  for (Index r = 0; r < cov.rows(); ++r) row(cov.row(r));
}

}  // namespace robising
