#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nowcast/adf.hpp"
#include "nowcast/combine.hpp"
#include "nowcast/errors.hpp"
#include "nowcast/diagnostics.hpp"
#include "nowcast/ensemble.hpp"
#include "nowcast/explain.hpp"
#include "nowcast/factor.hpp"
#include "nowcast/gw.hpp"
#include "nowcast/linear.hpp"
#include "nowcast/mcs.hpp"
#include "nowcast/metrics.hpp"
#include "nowcast/transform.hpp"
#include "nowcast/windows.hpp"

namespace py = pybind11;
using namespace nowcast;

namespace {

// quarters as "YYYY Qn" strings on the python side
std::vector<QuarterIndex> parse_quarters(const std::vector<std::string>& labels) {
  std::vector<QuarterIndex> out;
  out.reserve(labels.size());
  for (const auto& label : labels) out.push_back(QuarterIndex::parse(label));
  return out;
}

ForecastPanel build_panel(const std::vector<std::string>& quarters,
                          const std::vector<std::string>& models,
                          const Eigen::MatrixXd& forecasts, const Eigen::VectorXd& actuals) {
  ForecastPanel panel;
  panel.quarters = parse_quarters(quarters);
  panel.models = models;
  panel.forecasts = forecasts;
  panel.actuals = actuals;
  return panel;
}

py::dict combined_to_dict(const CombinedForecast& combo) {
  py::dict out;
  out["values"] = combo.values;
  out["models"] = combo.weights.models;
  out["weights"] = combo.weights.weights;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "walk-forward GDP nowcasting core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  // transforms
  m.def("deflate_and_growth",
        [](const std::vector<double>& nominal, const std::vector<double>& deflator) {
          return deflate_and_growth(nominal, deflator);
        },
        py::arg("nominal"), py::arg("deflator"));
  m.def("aggregate_monthly",
        [](const std::vector<double>& values, const std::string& method) {
          return aggregate_monthly(values, aggregation_from_string(method));
        },
        py::arg("values"), py::arg("method"));
  m.def("adf_test",
        [](const std::vector<double>& series, int lags, double alpha) {
          const auto r = adf_test(series, lags, alpha);
          py::dict out;
          out["stat"] = r.stat;
          out["critical_value"] = r.critical_value;
          out["lags"] = r.lags;
          out["stationary"] = r.stationary;
          return out;
        },
        py::arg("series"), py::arg("lags") = 4, py::arg("alpha") = 0.05);

  // windows
  m.def("plan_walk_forward",
        [](const std::string& data_first, const std::string& data_last,
           const std::string& first_test, const std::string& last_test) {
          Horizon horizon = Horizon::with_defaults();
          horizon.first_test = QuarterIndex::parse(first_test);
          horizon.last_test = QuarterIndex::parse(last_test);
          horizon.subperiods = {{"Overall", {horizon.first_test, horizon.last_test}}};
          const auto plans = plan_walk_forward(
              {QuarterIndex::parse(data_first), QuarterIndex::parse(data_last)}, horizon);
          py::list out;
          for (const auto& p : plans) {
            py::dict d;
            d["train"] = py::make_tuple(p.train.first.str(), p.train.last.str());
            d["validation"] = py::make_tuple(p.validation.first.str(), p.validation.last.str());
            d["test"] = p.test.str();
            out.append(d);
          }
          return out;
        },
        py::arg("data_first"), py::arg("data_last"), py::arg("first_test"),
        py::arg("last_test"));

  // penalized linear fits
  const auto fit_to_dict = [](const PenalizedFit& fit) {
    py::dict out;
    out["intercept"] = fit.intercept;
    out["coefficients"] = fit.coefficients;
    out["converged"] = fit.converged;
    return out;
  };
  m.def("rw_forecast",
        [](const std::vector<double>& y) { return rw_forecast(y); }, py::arg("y"));
  m.def("ar_forecast",
        [](const std::vector<double>& y, int order) {
          ArFit fit;
          const double f = ar_fit_forecast(y, order, &fit);
          py::dict out;
          out["forecast"] = f;
          out["intercept"] = fit.intercept;
          out["phi"] = fit.phi;
          return out;
        },
        py::arg("y"), py::arg("order") = 3);
  m.def("ridge_fit",
        [fit_to_dict](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha) {
          return fit_to_dict(ridge_fit(X, y, alpha));
        },
        py::arg("X"), py::arg("y"), py::arg("alpha"));
  m.def("lasso_fit",
        [fit_to_dict](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lam) {
          return fit_to_dict(lasso_fit(X, y, lam));
        },
        py::arg("X"), py::arg("y"), py::arg("lam"));
  m.def("enet_fit",
        [fit_to_dict](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha,
                      double gamma_mix) {
          return fit_to_dict(enet_fit(X, y, alpha, gamma_mix));
        },
        py::arg("X"), py::arg("y"), py::arg("alpha"), py::arg("gamma_mix"));

  // factor models
  m.def("pca_decompose",
        [](const Eigen::MatrixXd& X, int k) {
          const auto d = pca_decompose(X, k);
          py::dict out;
          out["loadings"] = d.loadings;
          out["eigenvalues"] = d.eigenvalues;
          out["scores"] = d.scores;
          return out;
        },
        py::arg("X"), py::arg("k"));
  m.def("pls_fit",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int components) {
          const auto fit = pls_fit(X, y, components);
          py::dict out;
          out["coefficients"] = fit.coefficients;
          out["y_mean"] = fit.y_mean;
          out["vip"] = vip_scores(fit);
          out["components"] = fit.components();
          return out;
        },
        py::arg("X"), py::arg("y"), py::arg("components"));
  m.def("pcr_fit",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int k, double lam) {
          const auto fit = pcr_fit(X, y, k, lam);
          py::dict out;
          out["intercept"] = fit.intercept;
          out["coefficients"] = fit.coefficients;
          return out;
        },
        py::arg("X"), py::arg("y"), py::arg("k"), py::arg("lam"));

  // ensembles
  m.def("rf_fit_predict",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::MatrixXd& X_new,
           int n_estimators, int max_depth, std::uint64_t seed) {
          ForestConfig config;
          config.n_estimators = n_estimators;
          config.tree.max_depth = max_depth;
          config.seed = seed;
          const auto fit = rf_fit(X, y, config);
          std::vector<double> preds;
          for (Eigen::Index i = 0; i < X_new.rows(); ++i)
            preds.push_back(fit.predict(X_new.row(i)));
          py::dict out;
          out["predictions"] = preds;
          out["mdi"] = fit.mdi();
          return out;
        },
        py::arg("X"), py::arg("y"), py::arg("X_new"), py::arg("n_estimators") = 100,
        py::arg("max_depth") = 6, py::arg("seed") = 42);
  m.def("xgb_fit_predict",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::MatrixXd& X_new,
           int n_rounds, int max_depth, double learning_rate, double reg_lambda,
           std::uint64_t seed) {
          BoostConfig config;
          config.n_rounds = n_rounds;
          config.max_depth = max_depth;
          config.learning_rate = learning_rate;
          config.lambda_l2 = reg_lambda;
          config.seed = seed;
          const auto fit = xgb_fit(X, y, config);
          std::vector<double> preds;
          for (Eigen::Index i = 0; i < X_new.rows(); ++i)
            preds.push_back(fit.predict(X_new.row(i)));
          py::dict out;
          out["predictions"] = preds;
          out["gain_importance"] = fit.gain_importance();
          return out;
        },
        py::arg("X"), py::arg("y"), py::arg("X_new"), py::arg("n_rounds") = 100,
        py::arg("max_depth") = 3, py::arg("learning_rate") = 0.1, py::arg("reg_lambda") = 1.0,
        py::arg("seed") = 42);

  // evaluation
  m.def("metrics",
        [](const std::vector<double>& forecasts, const std::vector<double>& actuals) {
          const auto m_ = metrics(forecasts, actuals);
          py::dict out;
          out["msfe"] = m_.msfe;
          out["rmsfe"] = m_.rmsfe;
          out["mafe"] = m_.mafe;
          return out;
        },
        py::arg("forecasts"), py::arg("actuals"));
  m.def("spearman",
        [](const std::vector<double>& x, const std::vector<double>& y) {
          return spearman(x, y);
        },
        py::arg("x"), py::arg("y"));
  m.def("shapiro_wilk",
        [](const std::vector<double>& residuals) {
          const auto r = shapiro_wilk(residuals);
          return py::make_tuple(r.w, r.p_value);
        },
        py::arg("residuals"));
  m.def("ljung_box",
        [](const std::vector<double>& residuals, int lags) {
          const auto r = ljung_box(residuals, lags);
          return py::make_tuple(r.q, r.p_value);
        },
        py::arg("residuals"), py::arg("lags") = 4);
  m.def("giacomini_white",
        [](const std::vector<double>& loss_model, const std::vector<double>& loss_benchmark,
           int max_lag) {
          const auto r = giacomini_white(loss_model, loss_benchmark, max_lag);
          py::dict out;
          out["intercept"] = r.intercept;
          out["intercept_p"] = r.intercept_p;
          out["wald"] = r.wald;
          out["wald_p"] = r.wald_p;
          out["degenerate"] = r.degenerate;
          return out;
        },
        py::arg("loss_model"), py::arg("loss_benchmark"), py::arg("max_lag") = 4);

  // selection and combination
  m.def("mcs",
        [](const std::vector<std::string>& quarters, const std::vector<std::string>& models,
           const Eigen::MatrixXd& losses, double alpha, int replicates, int block_len,
           const std::string& statistic, std::uint64_t seed) {
          LossMatrix matrix;
          matrix.quarters = parse_quarters(quarters);
          matrix.models = models;
          matrix.losses = losses;
          const auto r = mcs(matrix, alpha, replicates, block_len,
                             statistic == "TR" ? McsStatistic::kTR : McsStatistic::kTmax, seed);
          py::dict out;
          out["survivors"] = r.survivors;
          out["p_values"] = r.p_values;
          out["ranking"] = r.ranking;
          return out;
        },
        py::arg("quarters"), py::arg("models"), py::arg("losses"), py::arg("alpha") = 0.10,
        py::arg("replicates") = 10000, py::arg("block_len") = 4, py::arg("statistic") = "Tmax",
        py::arg("seed") = 42);
  m.def("combine_sa",
        [](const std::vector<std::string>& quarters, const std::vector<std::string>& models,
           const Eigen::MatrixXd& forecasts, const Eigen::VectorXd& actuals) {
          return combined_to_dict(combine_sa(build_panel(quarters, models, forecasts, actuals)));
        },
        py::arg("quarters"), py::arg("models"), py::arg("forecasts"), py::arg("actuals"));
  m.def("combine_wa",
        [](const std::vector<std::string>& quarters, const std::vector<std::string>& models,
           const Eigen::MatrixXd& forecasts, const Eigen::VectorXd& actuals) {
          return combined_to_dict(combine_wa(build_panel(quarters, models, forecasts, actuals)));
        },
        py::arg("quarters"), py::arg("models"), py::arg("forecasts"), py::arg("actuals"));
  m.def("combine_ewa",
        [](const std::vector<std::string>& quarters, const std::vector<std::string>& models,
           const Eigen::MatrixXd& forecasts, const Eigen::VectorXd& actuals, double eta) {
          return combined_to_dict(
              combine_ewa(build_panel(quarters, models, forecasts, actuals), eta));
        },
        py::arg("quarters"), py::arg("models"), py::arg("forecasts"), py::arg("actuals"),
        py::arg("eta"));
  m.def("combine_meta_ewa",
        [](const std::vector<std::string>& quarters, const std::vector<std::string>& models,
           const Eigen::MatrixXd& forecasts, const Eigen::VectorXd& actuals,
           const std::vector<double>& etas, double lambda) {
          const auto r =
              combine_meta_ewa(build_panel(quarters, models, forecasts, actuals), etas, lambda);
          py::dict out;
          out["values"] = r.combined.values;
          out["meta_weights"] = r.meta_weights;
          out["weights"] = r.combined.weights.weights;
          out["models"] = r.combined.weights.models;
          return out;
        },
        py::arg("quarters"), py::arg("models"), py::arg("forecasts"), py::arg("actuals"),
        py::arg("etas"), py::arg("lambda_") = 1.0);

  m.attr("__version__") = "0.1.0";
}
