#include "nowcast/tpe.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "nowcast/errors.hpp"
#include "nowcast/math_util.hpp"

namespace nowcast {

ParamDomain ParamDomain::real(double lo, double hi, bool log_scale) {
  ParamDomain d;
  d.kind = Kind::kReal;
  d.lo = lo;
  d.hi = hi;
  d.log_scale = log_scale;
  return d;
}

ParamDomain ParamDomain::integer(std::int64_t lo, std::int64_t hi) {
  ParamDomain d;
  d.kind = Kind::kInt;
  d.lo = static_cast<double>(lo);
  d.hi = static_cast<double>(hi);
  return d;
}

ParamDomain ParamDomain::categorical(std::vector<std::string> options) {
  ParamDomain d;
  d.kind = Kind::kCategorical;
  d.options = std::move(options);
  return d;
}

double param_real(const ParamMap& params, const std::string& name) {
  const auto it = params.find(name);
  if (it == params.end()) throw ConfigError("missing parameter '" + name + "'");
  if (const auto* v = std::get_if<double>(&it->second)) return *v;
  if (const auto* v = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*v);
  throw ConfigError("parameter '" + name + "' is not numeric");
}

std::int64_t param_int(const ParamMap& params, const std::string& name) {
  const auto it = params.find(name);
  if (it == params.end()) throw ConfigError("missing parameter '" + name + "'");
  if (const auto* v = std::get_if<std::int64_t>(&it->second)) return *v;
  if (const auto* v = std::get_if<double>(&it->second))
    return static_cast<std::int64_t>(std::llround(*v));
  throw ConfigError("parameter '" + name + "' is not numeric");
}

const std::string& param_cat(const ParamMap& params, const std::string& name) {
  const auto it = params.find(name);
  if (it == params.end()) throw ConfigError("missing parameter '" + name + "'");
  if (const auto* v = std::get_if<std::string>(&it->second)) return *v;
  throw ConfigError("parameter '" + name + "' is not categorical");
}

void SearchSpace::validate() const {
  if (parameters.empty()) throw ConfigError("search space is empty");
  for (const auto& [name, domain] : parameters) {
    switch (domain.kind) {
      case ParamDomain::Kind::kReal:
        if (!(domain.lo < domain.hi))
          throw ConfigError("parameter '" + name + "': lower bound must be < upper");
        if (domain.log_scale && domain.lo <= 0.0)
          throw ConfigError("parameter '" + name + "': log scale needs positive bounds");
        break;
      case ParamDomain::Kind::kInt:
        if (!(domain.lo <= domain.hi))
          throw ConfigError("parameter '" + name + "': integer bounds inverted");
        break;
      case ParamDomain::Kind::kCategorical:
        if (domain.options.empty())
          throw ConfigError("parameter '" + name + "': no categorical options");
        break;
    }
  }
}

int StudyState::completed_count() const {
  int n = 0;
  for (const auto& t : trials)
    if (t.status == TrialStatus::kComplete) ++n;
  return n;
}

std::optional<std::size_t> StudyState::best_trial() const {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (trials[i].status != TrialStatus::kComplete) continue;
    if (!best || *trials[i].final_loss < *trials[*best].final_loss) best = i;
  }
  return best;
}

namespace {

constexpr double kMinBandwidth = 1e-9;

// internal coordinate: log-space for log-scaled reals, value otherwise
double to_internal(const ParamDomain& d, double v) {
  return d.log_scale ? std::log(v) : v;
}

double from_internal(const ParamDomain& d, double v) {
  return d.log_scale ? std::exp(v) : v;
}

struct NumericKde {
  std::vector<double> centers;  // internal coordinates
  double bandwidth = 1.0;
  double lo = 0.0, hi = 1.0;  // internal bounds

  static NumericKde fit(const ParamDomain& d, const std::vector<double>& observed) {
    NumericKde kde;
    kde.lo = to_internal(d, d.lo);
    kde.hi = to_internal(d, d.kind == ParamDomain::Kind::kInt ? d.hi + 1.0 : d.hi);
    for (double v : observed) kde.centers.push_back(to_internal(d, v));
    const double n = static_cast<double>(std::max<std::size_t>(kde.centers.size(), 1));
    kde.bandwidth = std::max((kde.hi - kde.lo) * 1.06 * std::pow(n, -0.2), kMinBandwidth);
    return kde;
  }

  // truncated-gaussian mixture density; uniform over the box when empty
  double log_pdf(double x_internal) const {
    if (centers.empty()) return -std::log(hi - lo);
    double acc = 0.0;
    for (double mu : centers) {
      const double z = (x_internal - mu) / bandwidth;
      const double mass = stats::normal_cdf((hi - mu) / bandwidth) -
                          stats::normal_cdf((lo - mu) / bandwidth);
      const double pdf = std::exp(-0.5 * z * z) /
                         (bandwidth * std::sqrt(2.0 * M_PI) * std::max(mass, 1e-12));
      acc += pdf;
    }
    return std::log(std::max(acc / static_cast<double>(centers.size()), 1e-300));
  }

  double sample(Rng& rng) const {
    if (centers.empty()) return rng.uniform(lo, hi);
    const auto pick = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(centers.size()) - 1));
    const double mu = centers[pick];
    for (int tries = 0; tries < 100; ++tries) {
      const double draw = mu + bandwidth * rng.normal();
      if (draw >= lo && draw <= hi) return draw;
    }
    return std::clamp(mu, lo, hi);
  }
};

struct CategoricalKde {
  std::vector<double> weights;  // Laplace-smoothed probabilities

  static CategoricalKde fit(const ParamDomain& d, const std::vector<std::string>& observed) {
    CategoricalKde kde;
    const std::size_t k = d.options.size();
    std::vector<double> counts(k, 0.0);
    for (const auto& v : observed) {
      const auto it = std::find(d.options.begin(), d.options.end(), v);
      if (it != d.options.end()) counts[static_cast<std::size_t>(it - d.options.begin())] += 1.0;
    }
    const double total = static_cast<double>(observed.size()) + static_cast<double>(k);
    kde.weights.resize(k);
    for (std::size_t i = 0; i < k; ++i) kde.weights[i] = (counts[i] + 1.0) / total;
    return kde;
  }

  double log_pdf(std::size_t index) const { return std::log(weights[index]); }

  std::size_t sample(Rng& rng) const {
    double u = rng.uniform();
    for (std::size_t i = 0; i < weights.size(); ++i) {
      u -= weights[i];
      if (u <= 0.0) return i;
    }
    return weights.size() - 1;
  }
};

ParamValue uniform_draw(const ParamDomain& d, Rng& rng) {
  switch (d.kind) {
    case ParamDomain::Kind::kReal: {
      const double lo = to_internal(d, d.lo), hi = to_internal(d, d.hi);
      return from_internal(d, rng.uniform(lo, hi));
    }
    case ParamDomain::Kind::kInt:
      return rng.uniform_int(static_cast<std::int64_t>(d.lo), static_cast<std::int64_t>(d.hi));
    case ParamDomain::Kind::kCategorical:
      return d.options[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(d.options.size()) - 1))];
  }
  throw ConfigError("unreachable");
}

std::int64_t clamp_int(const ParamDomain& d, double internal) {
  const auto v = static_cast<std::int64_t>(std::floor(internal));
  return std::clamp(v, static_cast<std::int64_t>(d.lo), static_cast<std::int64_t>(d.hi));
}

}  // namespace

ParamMap suggest(const StudyState& study, const SearchSpace& space, Rng& rng) {
  space.validate();

  std::vector<const TrialRecord*> complete;
  for (const auto& t : study.trials)
    if (t.status == TrialStatus::kComplete) complete.push_back(&t);

  if (static_cast<int>(complete.size()) < study.n_startup) {
    ParamMap out;
    for (const auto& [name, domain] : space.parameters) out[name] = uniform_draw(domain, rng);
    return out;
  }

  // gamma-quantile split on final loss: ceil(gamma * n), at least one good
  std::sort(complete.begin(), complete.end(), [](const TrialRecord* a, const TrialRecord* b) {
    return *a->final_loss < *b->final_loss;
  });
  const auto n_good = static_cast<std::size_t>(std::max<std::int64_t>(
      1, static_cast<std::int64_t>(
             std::ceil(study.gamma_fraction * static_cast<double>(complete.size())))));

  struct DimModel {
    const ParamDomain* domain;
    NumericKde good_num, bad_num;
    CategoricalKde good_cat, bad_cat;
  };
  std::map<std::string, DimModel> models;
  for (const auto& [name, domain] : space.parameters) {
    DimModel m;
    m.domain = &domain;
    if (domain.kind == ParamDomain::Kind::kCategorical) {
      std::vector<std::string> good, bad;
      for (std::size_t i = 0; i < complete.size(); ++i) {
        const auto it = complete[i]->params.find(name);
        if (it == complete[i]->params.end()) continue;
        (i < n_good ? good : bad).push_back(std::get<std::string>(it->second));
      }
      m.good_cat = CategoricalKde::fit(domain, good);
      m.bad_cat = CategoricalKde::fit(domain, bad);
    } else {
      std::vector<double> good, bad;
      for (std::size_t i = 0; i < complete.size(); ++i) {
        const auto it = complete[i]->params.find(name);
        if (it == complete[i]->params.end()) continue;
        const double v = std::holds_alternative<std::int64_t>(it->second)
                             ? static_cast<double>(std::get<std::int64_t>(it->second))
                             : std::get<double>(it->second);
        (i < n_good ? good : bad).push_back(v);
      }
      m.good_num = NumericKde::fit(domain, good);
      m.bad_num = NumericKde::fit(domain, bad);
    }
    models.emplace(name, std::move(m));
  }

  ParamMap best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < study.n_candidates; ++c) {
    ParamMap candidate;
    double score = 0.0;
    for (const auto& [name, model] : models) {
      const auto& domain = *model.domain;
      if (domain.kind == ParamDomain::Kind::kCategorical) {
        const std::size_t idx = model.good_cat.sample(rng);
        candidate[name] = domain.options[idx];
        score += model.good_cat.log_pdf(idx) - model.bad_cat.log_pdf(idx);
      } else {
        const double internal = model.good_num.sample(rng);
        score += model.good_num.log_pdf(internal) - model.bad_num.log_pdf(internal);
        if (domain.kind == ParamDomain::Kind::kInt)
          candidate[name] = clamp_int(domain, internal);
        else
          candidate[name] = from_internal(domain, internal);
      }
    }
    if (score > best_score) {
      best_score = score;
      best = std::move(candidate);
    }
  }
  return best;
}

bool should_prune(const StudyState& study, int epoch, double loss) {
  if (study.completed_count() < study.n_startup) return false;
  std::vector<double> at_epoch;
  for (const auto& t : study.trials) {
    if (t.status != TrialStatus::kComplete) continue;
    for (const auto& [e, v] : t.intermediate_losses)
      if (e == epoch) {
        at_epoch.push_back(v);
        break;
      }
  }
  if (at_epoch.empty()) return false;
  return loss > stats::median(std::move(at_epoch));
}

bool TrialContext::report(int epoch, double loss) {
  record_.intermediate_losses.emplace_back(epoch, loss);
  if (should_prune(study_, epoch, loss)) {
    pruned_ = true;
    return false;
  }
  return true;
}

OptimizeResult optimize(const Objective& objective, const SearchSpace& space, StudyState study) {
  space.validate();
  if (study.n_trials < 1) throw ConfigError("n_trials must be >= 1");
  if (!(study.gamma_fraction > 0.0 && study.gamma_fraction < 1.0))
    throw ConfigError("gamma_fraction must be in (0,1)");

  Rng rng = Rng::stream(study.seed, {0x79});
  for (int i = 0; i < study.n_trials; ++i) {
    TrialRecord record;
    record.params = suggest(study, space, rng);
    TrialContext ctx(study, record);
    try {
      const double loss = objective(record.params, ctx);
      if (ctx.pruned()) {
        record.status = TrialStatus::kPruned;
      } else if (std::isfinite(loss)) {
        record.status = TrialStatus::kComplete;
        record.final_loss = loss;
      } else {
        record.status = TrialStatus::kFailed;
      }
    } catch (const std::exception&) {
      record.status = TrialStatus::kFailed;
    }
    study.trials.push_back(std::move(record));
  }

  const auto best = study.best_trial();
  if (!best) throw NumericError("optimization failed: no trial completed");
  OptimizeResult out;
  out.best_params = study.trials[*best].params;
  out.best_loss = *study.trials[*best].final_loss;
  out.study = std::move(study);
  return out;
}

namespace {

nlohmann::json value_to_json(const ParamValue& v) {
  nlohmann::json j;
  if (const auto* d = std::get_if<double>(&v)) {
    j["kind"] = "real";
    j["value"] = *d;
  } else if (const auto* i = std::get_if<std::int64_t>(&v)) {
    j["kind"] = "int";
    j["value"] = *i;
  } else {
    j["kind"] = "cat";
    j["value"] = std::get<std::string>(v);
  }
  return j;
}

ParamValue value_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind");
  if (kind == "real") return j.at("value").get<double>();
  if (kind == "int") return j.at("value").get<std::int64_t>();
  return j.at("value").get<std::string>();
}

}  // namespace

std::string study_to_json(const StudyState& study) {
  nlohmann::json j;
  j["gamma_fraction"] = study.gamma_fraction;
  j["n_trials"] = study.n_trials;
  j["n_startup"] = study.n_startup;
  j["n_candidates"] = study.n_candidates;
  j["seed"] = study.seed;
  j["trials"] = nlohmann::json::array();
  for (const auto& t : study.trials) {
    nlohmann::json jt;
    for (const auto& [name, value] : t.params) jt["params"][name] = value_to_json(value);
    jt["intermediate"] = t.intermediate_losses;
    jt["status"] = t.status == TrialStatus::kComplete  ? "complete"
                   : t.status == TrialStatus::kPruned ? "pruned"
                                                      : "failed";
    if (t.final_loss) jt["final_loss"] = *t.final_loss;
    j["trials"].push_back(std::move(jt));
  }
  return j.dump(2);
}

StudyState study_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  StudyState study;
  study.gamma_fraction = j.at("gamma_fraction");
  study.n_trials = j.at("n_trials");
  study.n_startup = j.at("n_startup");
  study.n_candidates = j.at("n_candidates");
  study.seed = j.at("seed");
  for (const auto& jt : j.at("trials")) {
    TrialRecord t;
    if (jt.contains("params"))
      for (const auto& [name, jv] : jt.at("params").items())
        t.params[name] = value_from_json(jv);
    for (const auto& pair : jt.at("intermediate"))
      t.intermediate_losses.emplace_back(pair.at(0).get<int>(), pair.at(1).get<double>());
    const std::string status = jt.at("status");
    t.status = status == "complete" ? TrialStatus::kComplete
               : status == "pruned" ? TrialStatus::kPruned
                                    : TrialStatus::kFailed;
    if (jt.contains("final_loss")) t.final_loss = jt.at("final_loss").get<double>();
    study.trials.push_back(std::move(t));
  }
  return study;
}

}  // namespace nowcast
