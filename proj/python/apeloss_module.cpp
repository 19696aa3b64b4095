#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "apeloss/core.hpp"
#include "apeloss/loss.hpp"
#include "apeloss/oracle.hpp"
#include "apeloss/ranking.hpp"
#include "apeloss/sim.hpp"

namespace py = pybind11;
using namespace apeloss;

namespace {

ScoreSet make_set(std::vector<double> scores, const std::vector<int>& labels) {
  std::vector<Label> out;
  out.reserve(labels.size());
  for (const int l : labels) {
    switch (l) {
      case 1:
        out.push_back(Label::Positive);
        break;
      case 0:
        out.push_back(Label::Negative);
        break;
      case -1:
        out.push_back(Label::Ignore);
        break;
      default:
        throw std::invalid_argument("labels must be 1, 0 or -1");
    }
  }
  return ScoreSet(std::move(scores), std::move(out));
}

}  // namespace

PYBIND11_MODULE(_apeloss, m) {
  m.doc() = "Pairwise-error ranking loss with analytic gradients";

  py::enum_<Label>(m, "Label")
      .value("Positive", Label::Positive)
      .value("Negative", Label::Negative)
      .value("Ignore", Label::Ignore);
  py::enum_<DistanceKind>(m, "DistanceKind")
      .value("Step", DistanceKind::Step)
      .value("Sigmoid", DistanceKind::Sigmoid)
      .value("CESigmoid", DistanceKind::CESigmoid);
  py::enum_<FilterMode>(m, "FilterMode")
      .value("RankSum", FilterMode::RankSum)
      .value("ValidNegCount", FilterMode::ValidNegCount);
  py::enum_<GradientForm>(m, "GradientForm")
      .value("ErrorDriven", GradientForm::ErrorDriven)
      .value("AutodiffCE", GradientForm::AutodiffCE);
  py::enum_<Reduction>(m, "Reduction")
      .value("MeanOverPositives", Reduction::MeanOverPositives)
      .value("Sum", Reduction::Sum);

  py::class_<ScoreSet>(m, "ScoreSet")
      .def(py::init(&make_set), py::arg("scores"), py::arg("labels"),
           "labels use 1 / 0 / -1 for positive / negative / ignore")
      .def("__len__", &ScoreSet::size)
      .def_property_readonly("scores", [](const ScoreSet& s) {
        return std::vector<double>(s.scores().begin(), s.scores().end());
      })
      .def_property_readonly("labels", [](const ScoreSet& s) {
        return std::vector<Label>(s.labels().begin(), s.labels().end());
      });

  py::class_<DistanceSpec>(m, "DistanceSpec")
      .def(py::init<>())
      .def(py::init<DistanceKind, double>(), py::arg("kind"),
           py::arg("parameter"))
      .def_readwrite("kind", &DistanceSpec::kind)
      .def_readwrite("parameter", &DistanceSpec::parameter);

  py::class_<LossConfig>(m, "LossConfig")
      .def(py::init<>())
      .def_readwrite("distance", &LossConfig::distance)
      .def_readwrite("gradient_form", &LossConfig::gradient_form)
      .def_readwrite("reduction", &LossConfig::reduction)
      .def_readwrite("rank_delta", &LossConfig::rank_delta)
      .def_property(
          "mode", [](const LossConfig& c) { return c.filter.mode; },
          [](LossConfig& c, FilterMode m) { c.filter.mode = m; })
      .def_property(
          "threshold", [](const LossConfig& c) { return c.filter.threshold; },
          [](LossConfig& c, double t) { c.filter.threshold = t; })
      .def_property(
          "filter_numerator",
          [](const LossConfig& c) { return c.filter.filter_numerator; },
          [](LossConfig& c, bool f) { c.filter.filter_numerator = f; })
      .def_property(
          "q", [](const LossConfig& c) { return c.budget.q; },
          [](LossConfig& c, std::optional<std::size_t> q) { c.budget.q = q; },
          "pair budget; None means unlimited")
      .def("validate", &LossConfig::validate);

  py::class_<RankStats>(m, "RankStats")
      .def_readonly("anchor_index", &RankStats::anchor_index)
      .def_readonly("rank_plus", &RankStats::rank_plus)
      .def_readonly("rank_minus", &RankStats::rank_minus)
      .def_readonly("balance_constant", &RankStats::balance_constant)
      .def_readonly("n_neg", &RankStats::n_neg)
      .def_readonly("active_pairs", &RankStats::active_pairs);

  py::class_<LossResult>(m, "LossResult")
      .def_readonly("total_loss", &LossResult::total_loss)
      .def_readonly("per_anchor_loss", &LossResult::per_anchor_loss)
      .def_readonly("gradient", &LossResult::gradient)
      .def_readonly("stats", &LossResult::stats)
      .def_readonly("truncated", &LossResult::truncated)
      .def_readonly("no_anchor", &LossResult::no_anchor);

  py::class_<oracle::GradCheckReport>(m, "GradCheckReport")
      .def_readonly("max_rel_error", &oracle::GradCheckReport::max_rel_error)
      .def_readonly("worst_index", &oracle::GradCheckReport::worst_index)
      .def_readonly("epsilon", &oracle::GradCheckReport::epsilon)
      .def_readonly("passed", &oracle::GradCheckReport::passed);

  m.def("step_distance", &step_distance, py::arg("x"), py::arg("delta"));
  m.def("sigmoid_distance", &sigmoid_distance, py::arg("x"), py::arg("lam"));
  m.def("sigmoid_distance_grad_wrt_u", &sigmoid_distance_grad_wrt_u,
        py::arg("x"), py::arg("lam"));
  m.def("ce_distance", &ce_distance, py::arg("x"), py::arg("lam"));
  m.def("ce_distance_grad_wrt_u", &ce_distance_grad_wrt_u, py::arg("x"),
        py::arg("lam"));

  m.def("compute_ranks",
        [](const ScoreSet& s, std::size_t u, double rank_delta) {
          const RankPair r = compute_ranks(s, u, rank_delta);
          return py::make_tuple(r.rank_plus, r.rank_minus);
        },
        py::arg("set"), py::arg("u"), py::arg("rank_delta"));
  m.def("valid_pair_indicator", &valid_pair_indicator);
  m.def("valid_negative_count", &valid_negative_count);
  m.def(
      "select_top_q_negatives",
      [](const ScoreSet& s, std::optional<std::size_t> q) {
        return select_top_q_negatives(s, PairBudget{q});
      },
      py::arg("set"), py::arg("q"));
  m.def("balance_constant", &balance_constant);

  const auto with_threads = [](auto fn) {
    return [fn](const ScoreSet& s, const LossConfig& c, unsigned threads) {
      py::gil_scoped_release release;
      return fn(s, c, ExecutionOptions{threads});
    };
  };
  m.def("ape_loss_forward", with_threads(&ape_loss_forward), py::arg("set"),
        py::arg("config"), py::arg("threads") = 1);
  m.def("ape_loss_gradient_error_driven",
        with_threads(&ape_loss_gradient_error_driven), py::arg("set"),
        py::arg("config"), py::arg("threads") = 1);
  m.def("ape_loss_gradient_autodiff_ce",
        with_threads(&ape_loss_gradient_autodiff_ce), py::arg("set"),
        py::arg("config"), py::arg("threads") = 1);

  m.def("ape_loss_gradient", with_threads(&ape_loss_gradient), py::arg("set"),
        py::arg("config"), py::arg("threads") = 1);

  m.def("finite_difference_gradient", &oracle::finite_difference_gradient,
        py::arg("set"), py::arg("config"),
        py::arg("epsilon") = oracle::kDefaultEpsilon);
  m.def("check_gradient", &oracle::check_gradient, py::arg("set"),
        py::arg("config"), py::arg("epsilon") = oracle::kDefaultEpsilon,
        py::arg("tolerance") = oracle::kDefaultTolerance);
  m.def("brute_force_loss", &oracle::brute_force_loss);

  m.def("ranking_ap", &sim::ranking_ap);
  m.def(
      "generate_scores",
      [](std::uint64_t seed, std::size_t n_pos, std::size_t n_neg,
         double pos_mean, double pos_std, double neg_mean, double neg_std) {
        return sim::generate_scores(
            {seed, n_pos, n_neg, pos_mean, pos_std, neg_mean, neg_std, {}});
      },
      py::arg("seed"), py::arg("n_pos") = 50, py::arg("n_neg") = 500,
      py::arg("pos_mean") = 0.6, py::arg("pos_std") = 0.1,
      py::arg("neg_mean") = 0.4, py::arg("neg_std") = 0.1);
  m.def(
      "simulate_training",
      [](const ScoreSet& s, const LossConfig& c, std::size_t steps, double lr) {
        const sim::Trajectory t = sim::simulate_training(s, c, steps, lr);
        py::list records;
        for (const sim::StepRecord& r : t.records) {
          py::dict d;
          d["step"] = r.step;
          d["total_loss"] = r.total_loss;
          d["ranking_ap"] = r.ranking_ap;
          d["gradient_norm"] = r.gradient_norm;
          d["active_pairs"] = r.active_pairs;
          records.append(d);
        }
        return py::make_tuple(records, t.final_set);
      },
      py::arg("set"), py::arg("config"), py::arg("steps"), py::arg("lr"));

  py::register_exception<sim::DivergenceError>(m, "DivergenceError",
                                               PyExc_RuntimeError);
  py::register_exception<sim::UndefinedMetricError>(m, "UndefinedMetricError",
                                                    PyExc_ValueError);
}
