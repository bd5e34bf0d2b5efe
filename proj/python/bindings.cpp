#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "drivevqa/pipeline.hpp"

namespace py = pybind11;
using namespace drivevqa;

namespace {

Category category_arg(const std::string& name) {
  auto c = parse_category(name);
  if (!c) throw Error(Errc::InvalidArgument, "unknown category '" + name + "'");
  return *c;
}

py::dict vote_texts(const std::vector<std::string>& texts, const std::string& category) {
  const Category cat = category_arg(category);
  std::vector<SampleAnswer> answers;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    try {
      answers.push_back({i, extract_answer(texts[i], cat)});
    } catch (const Error& e) {
      if (e.code() != Errc::UnparseableCompletion) throw;
      answers.push_back({i, std::nullopt});
    }
  }
  const VoteResult v = vote(answers);
  py::dict d;
  d["answer"] = render_answer(v.winner);
  d["key"] = v.winner.key();
  d["agreement"] = v.agreement;
  d["chosen_sample_index"] = v.chosen_sample_index;
  d["counts"] = v.counts;
  return d;
}

py::dict run_config(const std::filesystem::path& config, const std::filesystem::path& out, bool mock) {
  PipelineConfig cfg = load_pipeline_config(config);
  if (!out.empty()) cfg.paths.out = out;
  if (mock) cfg.mock = true;
  cfg.endpoint = with_env_overrides(cfg.endpoint);
  const RunOutcome r = cmd_run(cfg);
  py::dict d;
  d["run_id"] = r.run_id;
  d["run_dir"] = r.run_dir;
  d["questions"] = r.questions;
  d["requests_issued"] = r.requests_issued;
  d["requests_skipped"] = r.requests_skipped;
  d["failures"] = r.failures.size();
  d["exit_code"] = r.exit_code;
  if (r.report && r.report->overall) d["overall"] = *r.report->overall;
  return d;
}

}  // namespace

PYBIND11_MODULE(_drivevqa, m) {
  m.doc() = "Bindings for the driving VQA prompting pipeline";

  static py::exception<Error> error(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object code = py::str(std::string(to_string(e.code())));
      PyErr_SetObject(error.ptr(), py::make_tuple(code, py::str(e.what())).ptr());
    }
  });

  m.def("context", [](const std::filesystem::path& root, const std::string& scene, std::size_t frame,
                      const std::string& refs, bool require_poses) {
          const ContextOutput out = cmd_context(root, scene, frame, refs, require_poses);
          return out.text;
        },
        py::arg("dataset_root"), py::arg("scene"), py::arg("frame"), py::arg("refs") = "",
        py::arg("require_poses") = false, "Scene context block and ego line for a keyframe.");

  m.def("route", [](const std::string& text, const std::string& tag) {
          QuestionRecord q;
          q.text = text;
          q.category = tag;
          q.object_refs = parse_object_refs(text);
          return std::string(to_string(route_category(q)));
        },
        py::arg("question"), py::arg("tag") = "");

  m.def("vote", &vote_texts, py::arg("completions"), py::arg("category"),
        "Extract answers from raw completions and majority-vote them.");

  m.def("token_f1", [](const std::string& a, const std::string& b) { return token_f1(a, b); });

  m.def("ego_status", [](const std::vector<std::tuple<std::int64_t, double, double, double>>& poses) {
          std::vector<EgoPose> ps;
          for (const auto& [t, x, y, yaw] : poses) ps.push_back({t, Vec3(x, y, 0.0), Quaternion::from_yaw(yaw)});
          return serialize_ego_state(estimate_state(ps));
        },
        py::arg("poses"), "Ego line from (timestamp_us, x, y, yaw_rad) tuples.");

  m.def("run", &run_config, py::arg("config"), py::arg("out") = std::filesystem::path{}, py::arg("mock") = false,
        "Full pipeline run from a JSON config; returns a summary dict.");
}
