#pragma once

#include "prml/grid.hpp"
#include "prml/inference.hpp"
#include "prml/kernels.hpp"
#include "prml/likelihood.hpp"
#include "prml/observation.hpp"
#include "prml/params.hpp"
#include "prml/study.hpp"
#include "prml/weights.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace prml {

/// [optimizer] section. Empty bounds or init fall back to data-dependent defaults.
struct OptimizerSpec {
    ObjectiveKind objective = ObjectiveKind::prml;
    std::vector<double> lo;
    std::vector<double> hi;
    std::vector<double> init;
    std::size_t permutations = 1;
    std::uint64_t seed = 1;
    DataOrder order = DataOrder::as_given;
    std::size_t starts = 3;
    std::size_t max_iter = 200;
    double alpha = 0.05;
    bool nelder_mead = false;
};

/// [curve] section: a tensor grid of theta values, one entry per component.
struct CurveSpec {
    std::vector<double> lo;
    std::vector<double> hi;
    std::vector<std::size_t> points;

    std::size_t size() const;
    /// Row-major enumeration; the last component varies fastest.
    std::vector<std::vector<double>> thetas() const;
};

struct Config {
    /// d, r and T are 0 unless given; resolve_kernel fills them from the data.
    KernelSpec kernel{"density", 0, 0, 0};
    /// [grid]; anything left empty is chosen from the data.
    struct {
        std::optional<GridRule> rule;
        std::vector<Interval> bounds;
        std::vector<std::size_t> points;
    } grid;
    WeightSpec weights;
    OptimizerSpec optimizer;
    CurveSpec curve;
    double cutoff = 0.5;  ///< [test]
    StudySpec study;
};

/// INI-style text: `[section]` headers and `key = value` lines, `;` or `#`
/// comments. Lists are separated by spaces or commas. Unknown sections or
/// keys are rejected. Errors are ArgumentError naming the line or the key.
Config parse_config(std::istream& is);
Config load_config(const std::string& path);

/// Component names of theta for a kernel: sigma | beta1..betad[, sigma] | theta.
std::vector<std::string> parameter_names(const KernelSpec& spec);

// Data files. Blank lines and lines starting with '#' are skipped; the first
// other line is the header. Malformed input raises ArgumentError with "line N".

/// Header containing a `y` column; other columns are ignored.
Dataset read_scalar_csv(std::istream& is);
/// `subject,x1..xd,y`, rows grouped by subject, the same count r per subject.
Dataset read_replicated_csv(std::istream& is);
/// `y1..yT` with an optional 0/1 `truth` column (1 marks a non-null series).
Dataset read_series_csv(std::istream& is, std::vector<bool>* truth = nullptr);
/// Dispatches on the kernel name.
Dataset read_dataset_csv(std::istream& is, const KernelSpec& spec, std::vector<bool>* truth = nullptr);
Dataset load_dataset(const std::string& path, const KernelSpec& spec, std::vector<bool>* truth = nullptr);
/// Writes the layout matching the observation type; `truth` only for series.
void write_dataset_csv(std::ostream& os, const Dataset& data, const std::vector<bool>& truth = {});

/// Copies spec, filling zero dimensions from the data and checking the
/// data's shape against explicit ones.
KernelSpec resolve_kernel(const KernelSpec& spec, const Dataset& data);

/// Grid, box and starting point for a fit, after defaults.
struct FitSetup {
    KernelSpec kernel;
    GridPtr grid;
    Box box;
    std::vector<double> init;
};

/// Defaults when the config leaves them out:
///   density:     grid trapezoid [min y, max y]; sigma in [0.01 s, 2 s], init 0.5 s (s = sd of y)
///   linear_ri:   grid trapezoid ybar +/- 3 s_y; beta in OLS +/- 10, sigma in [0.05, 20]
///   logistic_ri: grid trapezoid [-8, 8]; beta in pooled logistic +/- 10
///   ar1_mix:     grid Legendre 21 x 21 on [0.5, 2] x [0.05, 0.95]; theta in [0.001, 0.999], init 0.5
FitSetup resolve_setup(const Config& cfg, const Dataset& data);
PRModel make_model(const Config& cfg, const FitSetup& setup);
LikelihoodConfig likelihood_config(const OptimizerSpec& opt);
FitOptions fit_options(const OptimizerSpec& opt);

/// exp(l - max l) divided by its tensor trapezoid integral over the curve grid.
std::vector<double> normalized_curve(std::span<const double> loglik, const CurveSpec& curve);
/// theta_1..theta_k, loglik_prml, loglik_profile, normalized_prml, normalized_profile.
void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& points, const CurveSpec& curve);

/// `key = value` lines in a fixed order; doubles in shortest round-trip form.
void write_fit_report(std::ostream& os, const FitResult& fit, const std::vector<std::string>& names);
/// u (or u1,u2) and f columns.
void write_density_csv(std::ostream& os, const GridDensity& f);

/// Shortest decimal that reads back to the same double.
std::string format_double(double v);

}  // namespace prml
