#include "ppck/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ppck {

namespace {

constexpr int kSchemaVersion = 1;

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

nlohmann::json matrix_to_json(const Matrix& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, Index cols_hint = -1) {
  if (!j.is_array()) throw ValidationError("model archive: expected an array");
  const Index rows = static_cast<Index>(j.size());
  if (rows == 0) return Matrix(0, std::max<Index>(cols_hint, 0));
  const Index cols = static_cast<Index>(j[0].size());
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    if (static_cast<Index>(j[i].size()) != cols)
      throw ValidationError("model archive: ragged matrix");
    for (Index c = 0; c < cols; ++c) M(i, c) = j[i][c].get<double>();
  }
  return M;
}

nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vector vector_from_json(const nlohmann::json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace

Matrix read_matrix_csv(const std::string& path, char header_prefix) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto headers = split(line, ',');
  const Index cols = static_cast<Index>(headers.size());
  if (cols == 0) throw ValidationError(path + ": empty header");
  for (Index c = 0; c < cols; ++c) {
    const std::string expect =
        std::string(1, header_prefix) + std::to_string(c + 1);
    if (headers[c] != expect)
      throw ValidationError(path + ": expected header column " + expect +
                            ", found '" + headers[c] + "'");
  }
  std::vector<double> data;
  Index rows = 0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (static_cast<Index>(fields.size()) != cols)
      throw ValidationError(path + ":" + std::to_string(lineno) +
                            ": expected " + std::to_string(cols) +
                            " fields, found " + std::to_string(fields.size()));
    for (const auto& f : fields) {
      size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(f, &pos);
      } catch (const std::exception&) {
        throw ValidationError(path + ":" + std::to_string(lineno) +
                              ": cannot parse '" + f + "'");
      }
      if (pos != f.size())
        throw ValidationError(path + ":" + std::to_string(lineno) +
                              ": trailing characters in '" + f + "'");
      data.push_back(v);
    }
    ++rows;
  }
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index c = 0; c < cols; ++c) M(i, c) = data[i * cols + c];
  return M;
}

void write_matrix_csv(const std::string& path, const Matrix& M,
                      char header_prefix) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  for (Index c = 0; c < M.cols(); ++c) {
    if (c > 0) out << ',';
    out << header_prefix << (c + 1);
  }
  out << '\n';
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index c = 0; c < M.cols(); ++c) {
      if (c > 0) out << ',';
      out << fmt_double(M(i, c));
    }
    out << '\n';
  }
  if (!out) throw ValidationError("failed writing " + path);
}

FidelityData load_level(const std::string& design_path,
                        const std::string& output_path, int level) {
  FidelityData data;
  data.level = level;
  data.X = read_matrix_csv(design_path, 'x');
  data.Y = read_matrix_csv(output_path, 'y');
  if (data.X.rows() != data.Y.rows())
    throw ValidationError(output_path + ": " + std::to_string(data.Y.rows()) +
                          " rows do not align with " +
                          std::to_string(data.X.rows()) + " design rows (" +
                          design_path + "), first unmatched row " +
                          std::to_string(std::min(data.X.rows(), data.Y.rows()) +
                                         1));
  if (!data.X.allFinite())
    throw ValidationError(design_path + ": non-finite entries");
  if (!data.Y.allFinite())
    throw ValidationError(output_path + ": non-finite entries");
  for (Index r = 1; r < data.X.rows(); ++r)
    if (find_row(data.X.topRows(r), data.X.row(r), 0.0) >= 0)
      throw ValidationError(design_path + ": duplicate design row " +
                            std::to_string(r + 1));
  return data;
}

void save_model(const std::string& path, const FittedEmulator& em) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["nu"] = em.config.nu;
  j["trend_degree"] = em.trend.degree;
  j["s"] = em.aug.s;
  j["d"] = em.aug.d;
  j["N"] = em.aug.N;
  j["converged"] = em.converged;
  j["iterations"] = em.iterations;
  j["normalization"] = {{"lo", vector_to_json(em.aug.norm.lo)},
                        {"range", vector_to_json(em.aug.norm.range)}};

  nlohmann::json cfg;
  cfg["seed"] = em.config.seed;
  cfg["m_init"] = em.config.m_init;
  cfg["m_growth"] = em.config.m_growth;
  cfg["m_max"] = em.config.m_max;
  cfg["max_iters"] = em.config.max_iters;
  cfg["tol_log_phi"] = em.config.tol_log_phi;
  cfg["tol_streak"] = em.config.tol_streak;
  cfg["base_jitter"] = em.config.base_jitter;
  cfg["m_pred"] = em.config.m_pred;
  cfg["optimizer_max_evals"] = em.config.optimizer.max_evals;
  j["config"] = cfg;

  nlohmann::json levels = nlohmann::json::array();
  for (int t = 0; t < em.aug.s; ++t) {
    nlohmann::json lv;
    // Raw-unit design: the augmentation is rebuilt exactly on load.
    lv["X"] = matrix_to_json(em.x_raw[t]);
    lv["Y"] = matrix_to_json(em.y_obs[t]);
    lv["phi"] = vector_to_json(em.phis[t].phis);
    lv["b_hat"] = matrix_to_json(em.b_hat[t]);
    lv["sigma2"] = vector_to_json(em.sigma2[t]);
    lv["jr"] = {{"a", em.jr[t].a},
                {"b", em.jr[t].b},
                {"C", vector_to_json(em.jr[t].C)}};
    levels.push_back(std::move(lv));
  }
  j["levels"] = std::move(levels);

  nlohmann::json retained = nlohmann::json::array();
  for (int k = 0; k < em.retained.M(); ++k) {
    nlohmann::json per_level = nlohmann::json::array();
    for (int t = 0; t < em.aug.s; ++t)
      per_level.push_back(matrix_to_json(em.retained.y[k][t]));
    retained.push_back(std::move(per_level));
  }
  j["retained_draws"] = std::move(retained);

  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << j.dump(1) << '\n';
  if (!out) throw ValidationError("failed writing " + path);
}

FittedEmulator load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": not a valid model archive: " + e.what());
  }
  if (!j.contains("schema_version") ||
      j["schema_version"].get<int>() != kSchemaVersion)
    throw ValidationError(path + ": unsupported model schema version");

  FittedEmulator em;
  McemConfig cfg;
  cfg.nu = j.at("nu").get<double>();
  cfg.trend_degree = j.at("trend_degree").get<int>();
  const auto& jc = j.at("config");
  cfg.seed = jc.at("seed").get<uint64_t>();
  cfg.m_init = jc.at("m_init").get<int>();
  cfg.m_growth = jc.at("m_growth").get<int>();
  cfg.m_max = jc.at("m_max").get<int>();
  cfg.max_iters = jc.at("max_iters").get<int>();
  cfg.tol_log_phi = jc.at("tol_log_phi").get<double>();
  cfg.tol_streak = jc.at("tol_streak").get<int>();
  cfg.base_jitter = jc.at("base_jitter").get<double>();
  cfg.m_pred = jc.at("m_pred").get<int>();
  cfg.optimizer.max_evals = jc.at("optimizer_max_evals").get<int>();
  em.config = cfg;
  em.trend = TrendBasis{cfg.trend_degree};
  em.converged = j.at("converged").get<bool>();
  em.iterations = j.at("iterations").get<int>();

  const int s = j.at("s").get<int>();
  const Index d = j.at("d").get<Index>();
  const Index N = j.at("N").get<Index>();
  if (static_cast<int>(j.at("levels").size()) != s)
    throw ValidationError(path + ": level count disagrees with declared s");

  std::vector<FidelityData> levels(s);
  for (int t = 0; t < s; ++t) {
    const auto& lv = j["levels"][t];
    levels[t].level = t + 1;
    levels[t].X = matrix_from_json(lv.at("X"), d);
    levels[t].Y = matrix_from_json(lv.at("Y"), N);
    if (levels[t].X.cols() != d)
      throw ValidationError(path + ": level " + std::to_string(t + 1) +
                            " design disagrees with declared d");
    if (levels[t].Y.cols() != N)
      throw ValidationError(path + ": level " + std::to_string(t + 1) +
                            " output disagrees with declared N");
  }
  em.aug = build_augmentation(levels);
  em.x_raw.resize(s);
  em.y_obs.resize(s);
  for (int t = 0; t < s; ++t) {
    em.x_raw[t] = levels[t].X;
    em.y_obs[t] = levels[t].Y;
  }

  const Vector lo = vector_from_json(j.at("normalization").at("lo"));
  const Vector range = vector_from_json(j.at("normalization").at("range"));
  if ((lo - em.aug.norm.lo).cwiseAbs().maxCoeff() > 0.0 ||
      (range - em.aug.norm.range).cwiseAbs().maxCoeff() > 0.0)
    throw ValidationError(path + ": stored normalization disagrees with data");

  for (int t = 0; t < s; ++t) {
    const auto& lv = j["levels"][t];
    em.phis.emplace_back(vector_from_json(lv.at("phi")), cfg.nu);
    em.b_hat.push_back(matrix_from_json(lv.at("b_hat")));
    em.sigma2.push_back(vector_from_json(lv.at("sigma2")));
    JrPriorConfig jr;
    jr.a = lv.at("jr").at("a").get<double>();
    jr.b = lv.at("jr").at("b").get<double>();
    jr.C = vector_from_json(lv.at("jr").at("C"));
    em.jr.push_back(std::move(jr));
  }

  const auto& jd = j.at("retained_draws");
  em.retained.y.resize(jd.size());
  for (size_t k = 0; k < jd.size(); ++k) {
    if (static_cast<int>(jd[k].size()) != s)
      throw ValidationError(path + ": retained draw level count mismatch");
    em.retained.y[k].resize(s);
    for (int t = 0; t < s; ++t) {
      em.retained.y[k][t] = matrix_from_json(jd[k][t], N);
      if (em.retained.y[k][t].rows() != em.aug.n_miss(t) ||
          (em.retained.y[k][t].rows() > 0 &&
           em.retained.y[k][t].cols() != N))
        throw ValidationError(path + ": retained draw shape disagrees with design");
    }
  }
  return em;
}

void write_trace_csv(const std::string& path, const FittedEmulator& em) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << "iter,M,wall_ms";
  for (int t = 0; t < em.aug.s; ++t) {
    for (Index l = 0; l < em.aug.d; ++l)
      out << ",phi" << (t + 1) << "_" << (l + 1);
    out << ",qhat" << (t + 1);
  }
  out << '\n';
  for (const auto& row : em.trace) {
    out << row.iter << ',' << row.M << ',' << fmt_double(row.wall_ms);
    for (int t = 0; t < em.aug.s; ++t) {
      for (Index l = 0; l < em.aug.d; ++l)
        out << ',' << fmt_double(row.phis[t][l]);
      out << ',' << fmt_double(row.q[t]);
    }
    out << '\n';
  }
}

}  // namespace ppck
