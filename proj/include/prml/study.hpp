#pragma once

#include "prml/kl_oracle.hpp"
#include "prml/simulate.hpp"
#include "prml/weights.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace prml {

enum class StudyKind { density, kl_limit, lmm, glmm, armix };
StudyKind parse_study_kind(const std::string& name);
const char* study_kind_name(StudyKind kind);

struct StudySpec {
    StudyKind kind = StudyKind::density;
    std::size_t n = 50;
    std::size_t replications = 1;
    std::uint64_t seed = 1;  ///< replication k uses seed + k

    std::string mix;    ///< density mix or intercept law; empty picks beta26 / gaussian
    double sigma = 0.1; ///< density study: true kernel sd
    std::size_t r = 4;  ///< regression studies: replicates per subject
    RegressionTruth regression;
    std::size_t T = 50;   ///< armix series length
    double theta = 0.75;  ///< armix null proportion
    std::vector<double> sigma_grid;  ///< kl_limit; empty means 0.05, 0.06, ..., 0.30

    /// Any of marginal, profile, gaussian (regression studies only). Empty means marginal.
    std::vector<std::string> methods;
    std::size_t permutations = 1;
    std::size_t grid_points = 0;  ///< 0 picks the study default (201; 21 per axis for armix)
    WeightSpec weights;
    std::size_t starts = 3;
    double alpha = 0.05;
    double cutoff = 0.5;
    std::size_t oracle_J = 101;  ///< kl_limit oracle grid and y-rule size
    std::size_t oracle_R = 101;

    /// Throws ArgumentError or DomainError naming the offending field.
    void validate() const;
    std::vector<std::string> resolved_methods() const;
    std::vector<double> resolved_sigma_grid() const;
};

struct ReplicationRow {
    std::size_t replication = 0;
    std::uint64_t seed = 0;
    std::string method;
    bool ok = true;
    std::string error;
    bool converged = false;
    bool boundary = false;
    std::vector<double> truth;
    std::vector<double> estimate;
    std::vector<double> se;
    std::vector<double> lo;  ///< NaN when the interval is not available
    std::vector<double> hi;
    // armix only
    double fdr = 0.0, mp = 0.0, oracle_fdr = 0.0, oracle_mp = 0.0;
};

struct ComponentSummary {
    std::string name;
    std::size_t count = 0;
    double rmse = 0.0;
    double coverage = 0.0;  ///< fraction in [0,1]
    double mean = 0.0;
    double sd = 0.0;
};

struct MethodSummary {
    std::string method;
    std::size_t ok = 0;
    std::size_t failures = 0;
    std::size_t nonconverged = 0;
    std::vector<ComponentSummary> components;
    double fdr = 0.0, mp = 0.0, oracle_fdr = 0.0, oracle_mp = 0.0;  ///< armix means
};

struct StudyReport {
    StudySpec spec;
    std::vector<std::string> components;  ///< names of the estimated quantities
    std::vector<ReplicationRow> rows;     ///< replication-major, then method
    std::vector<MethodSummary> summary;
    std::size_t failures = 0;
    double seconds = 0.0;
};

/// Replication counts (and, for armix, n and permutations) of the full-size
/// published studies: 500 replications for lmm/glmm, 100 for kl_limit and
/// armix, armix with n = 5000 and 25 permutations.
StudySpec full_scale(StudySpec spec);

/// K*(sigma) for the kl_limit setting (y = 0.5 + 0.1 t_5, Gaussian location
/// kernel): Legendre grid of oracle_J nodes on [0, 1], oracle_R y-nodes on
/// [-0.5, 1.5], over resolved_sigma_grid().
std::vector<KStarPoint> kl_limit_oracle(const StudySpec& spec, const KLOptions& opts = {});

/// Runs every replication (in parallel; results do not depend on the worker count).
StudyReport run_study(const StudySpec& spec);

/// Aggregates recomputed from rows; run_study fills `summary` with this.
std::vector<MethodSummary> summarize(const std::vector<ReplicationRow>& rows,
                                     const std::vector<std::string>& components,
                                     const std::vector<std::string>& methods);

void write_study_rows_csv(std::ostream& os, const StudyReport& report);
void write_study_summary(std::ostream& os, const StudyReport& report);

}  // namespace prml
