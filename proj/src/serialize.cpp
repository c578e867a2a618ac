#include "snapfit/serialize.hpp"

#include <fstream>
#include <sstream>

namespace snapfit::serialize {

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (long i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vec_from_json(const json& arr) {
  Eigen::VectorXd v(static_cast<long>(arr.size()));
  for (long i = 0; i < v.size(); ++i) v(i) = arr[i].get<double>();
  return v;
}

json mat_to_json(const Eigen::MatrixXd& m) {
  // Flat row-major array; shape is recorded alongside.
  json arr = json::array();
  for (long r = 0; r < m.rows(); ++r) {
    for (long c = 0; c < m.cols(); ++c) arr.push_back(m(r, c));
  }
  return arr;
}

Eigen::MatrixXd mat_from_json(const json& arr, long rows, long cols) {
  if (static_cast<long>(arr.size()) != rows * cols) {
    throw IoError("matrix payload does not match its declared shape");
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) m(r, c) = arr[k++].get<double>();
  }
  return m;
}

json knots_to_json(const pspline::KnotVector& k) {
  return {{"degree", k.degree},
          {"domain", {k.domain_lo, k.domain_hi}},
          {"interior", k.interior}};
}

pspline::KnotVector knots_from_json(const json& j) {
  pspline::KnotVector k;
  k.degree = j.at("degree").get<int>();
  k.domain_lo = j.at("domain")[0].get<double>();
  k.domain_hi = j.at("domain")[1].get<double>();
  k.interior = j.at("interior").get<std::vector<double>>();
  k.validate();
  return k;
}

}  // namespace

json spline_model_to_json(const pspline::SplineModel& model) {
  return {{"knots", knots_to_json(model.knots)},
          {"lambda", model.lambda},
          {"penalty_order", model.penalty_order},
          {"beta", vec_to_json(model.beta)}};
}

pspline::SplineModel spline_model_from_json(const json& j) {
  pspline::SplineModel model;
  model.knots = knots_from_json(j.at("knots"));
  model.lambda = j.at("lambda").get<double>();
  model.penalty_order = j.at("penalty_order").get<int>();
  model.beta = vec_from_json(j.at("beta"));
  if (model.beta.size() != static_cast<long>(model.knots.n_basis())) {
    throw IoError("spline model: beta length does not match the basis");
  }
  return model;
}

json piecewise_to_json(const pspline::PiecewiseCubic& pw) {
  json coeffs = json::array();
  for (const auto& c : pw.coeffs) coeffs.push_back({c.a, c.b, c.c, c.d});
  return {{"breakpoints", pw.breakpoints}, {"coeffs", coeffs}};
}

pspline::PiecewiseCubic piecewise_from_json(const json& j) {
  pspline::PiecewiseCubic pw;
  pw.breakpoints = j.at("breakpoints").get<std::vector<double>>();
  for (const json& c : j.at("coeffs")) {
    pw.coeffs.push_back({c[0].get<double>(), c[1].get<double>(),
                         c[2].get<double>(), c[3].get<double>()});
  }
  if (pw.coeffs.size() + 1 != pw.breakpoints.size()) {
    throw IoError("piecewise model: coefficient count does not match breakpoints");
  }
  return pw;
}

json response_model_to_json(const pspline::CoeffResponseModel& crm) {
  json effects = json::array();
  for (const auto& e : crm.effects) effects.push_back(vec_to_json(e));
  return {{"knots", knots_to_json(crm.knots)},
          {"beta0", vec_to_json(crm.beta0)},
          {"effects", effects},
          {"factor_names", crm.factor_names}};
}

pspline::CoeffResponseModel response_model_from_json(const json& j) {
  pspline::CoeffResponseModel crm;
  crm.knots = knots_from_json(j.at("knots"));
  crm.beta0 = vec_from_json(j.at("beta0"));
  for (const json& e : j.at("effects")) crm.effects.push_back(vec_from_json(e));
  crm.factor_names = j.at("factor_names").get<std::vector<std::string>>();
  return crm;
}

json net_model_to_json(const seqnet::SeqNetModel& model) {
  json layers = json::array();
  static const char* kGateNames[] = {"input", "forget", "candidate", "output"};
  for (const seqnet::CellParams& cell : model.params.layers) {
    json layer;
    layer["in_dim"] = cell.w[0].cols();
    for (int g = 0; g < seqnet::kNumGates; ++g) {
      layer[std::string("w_") + kGateNames[g]] = mat_to_json(cell.w[g]);
      layer[std::string("u_") + kGateNames[g]] = mat_to_json(cell.u[g]);
      layer[std::string("b_") + kGateNames[g]] = vec_to_json(cell.b[g]);
    }
    layers.push_back(std::move(layer));
  }
  json input_norm = json::array();
  for (const seqnet::Norm& n : model.input_norm) {
    input_norm.push_back({{"mean", n.mean}, {"scale", n.scale}});
  }
  return {{"config",
           {{"layers", model.layer_count()},
            {"hidden", model.hidden},
            {"head_out", model.head_out}}},
          {"norms",
           {{"input", input_norm},
            {"output",
             {{"mean", model.output_norm.mean},
              {"scale", model.output_norm.scale}}}}},
          {"weights",
           {{"layers", layers},
            {"head_w", mat_to_json(model.params.head_w)},
            {"head_b", vec_to_json(model.params.head_b)}}}};
}

seqnet::SeqNetModel net_model_from_json(const json& j) {
  seqnet::SeqNetModel model;
  const json& cfg = j.at("config");
  model.hidden = cfg.at("hidden").get<long>();
  model.head_out = cfg.at("head_out").get<long>();

  static const char* kGateNames[] = {"input", "forget", "candidate", "output"};
  for (const json& layer : j.at("weights").at("layers")) {
    const long in_dim = layer.at("in_dim").get<long>();
    seqnet::CellParams cell;
    for (int g = 0; g < seqnet::kNumGates; ++g) {
      cell.w[g] = mat_from_json(layer.at(std::string("w_") + kGateNames[g]),
                                model.hidden, in_dim);
      cell.u[g] = mat_from_json(layer.at(std::string("u_") + kGateNames[g]),
                                model.hidden, model.hidden);
      cell.b[g] = vec_from_json(layer.at(std::string("b_") + kGateNames[g]));
    }
    model.params.layers.push_back(std::move(cell));
  }
  if (model.layer_count() != cfg.at("layers").get<long>()) {
    throw IoError("net model: layer count does not match config");
  }
  model.params.head_w =
      mat_from_json(j.at("weights").at("head_w"), model.head_out, model.hidden);
  model.params.head_b = vec_from_json(j.at("weights").at("head_b"));

  for (const json& n : j.at("norms").at("input")) {
    model.input_norm.push_back(
        {n.at("mean").get<double>(), n.at("scale").get<double>()});
  }
  model.output_norm.mean = j.at("norms").at("output").at("mean").get<double>();
  model.output_norm.scale = j.at("norms").at("output").at("scale").get<double>();
  return model;
}

json train_report_to_json(const seqnet::TrainReport& report) {
  return {{"epochs_run", report.epochs_run},
          {"final_train_loss", report.final_train_loss},
          {"test_mae", report.test_mae},
          {"stopped_early", report.stopped_early},
          {"train_ids", report.train_ids},
          {"test_ids", report.test_ids},
          {"loss_history", report.loss_history}};
}

json metrics_to_json(const eval::MetricsReport& report) {
  json rows = json::array();
  for (const eval::MetricsRow& row : report.rows) {
    rows.push_back({{"method", row.method},
                    {"scope", row.scope},
                    {"n_profiles", row.n_profiles},
                    {"mae", row.mae},
                    {"mse", row.mse}});
  }
  return {{"rows", rows}};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace snapfit::serialize
