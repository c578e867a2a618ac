#pragma once

#include <string>

#include <json.hpp>

#include "snapfit/eval.hpp"
#include "snapfit/pspline.hpp"
#include "snapfit/seqnet.hpp"

namespace snapfit::serialize {

using json = nlohmann::ordered_json;

json spline_model_to_json(const pspline::SplineModel& model);
pspline::SplineModel spline_model_from_json(const json& j);

json piecewise_to_json(const pspline::PiecewiseCubic& pw);
pspline::PiecewiseCubic piecewise_from_json(const json& j);

json response_model_to_json(const pspline::CoeffResponseModel& crm);
pspline::CoeffResponseModel response_model_from_json(const json& j);

json net_model_to_json(const seqnet::SeqNetModel& model);
seqnet::SeqNetModel net_model_from_json(const json& j);

json train_report_to_json(const seqnet::TrainReport& report);

json metrics_to_json(const eval::MetricsReport& report);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace snapfit::serialize
