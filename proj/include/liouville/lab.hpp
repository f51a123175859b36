#pragma once

#include "liouville/asymptotics.hpp"
#include "liouville/io.hpp"
#include "liouville/solver.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace liouville {

/// One member of an experiment family with its weight and (when exact) closed form.
struct LabMember {
    int k = 0;
    double tau = 0.0;
    double lambda = 0.0;
    PoleConfig poles;
    WeightSpec weight;
    int alpha_total = 0;      // sum of multiplicities, including a pole at the origin
    std::optional<ClosedForm> exact;
    std::optional<ScalarField> field;
    std::string source;       // exact | solve
};

std::vector<LabMember> build_members(const ExperimentConfig& c);
/// Attaches closed-form fields on the configured grid.
void attach_exact_fields(std::vector<LabMember>& members, const ExperimentConfig& c);

struct SolveRun {
    std::vector<ConvergenceRecord> records;  // index-aligned with members
    int failures = 0;
};
/// Solves every member in place (field replaced by the solution or the best iterate).
SolveRun solve_members(std::vector<LabMember>& members, const ExperimentConfig& c, int jobs);

struct MemberDiagnostics {
    int k = 0;
    double tau = 0.0, eps = std::numeric_limits<double>::quiet_NaN(), lambda = 0.0;
    std::vector<double> mass, mass_error;
    double peak = 0.0, circle_min = 0.0, w0 = 0.0;
    std::optional<EnergyCheck> energy;
    std::optional<double> profile;
    std::optional<PeakRelation> peak_relation;
    std::optional<double> oscillation;
    std::optional<PointwiseBound> pointwise;
    std::optional<PohozaevCheck> pohozaev;
    std::optional<double> green_defect, green_tolerance;
    std::optional<double> exact_error;  // sup |solved - exact| when both are known
    std::vector<std::string> notes;     // diagnostics skipped outside their domain
};

struct DiagnosticsReport {
    ExperimentConfig config;
    std::vector<double> deltas;
    std::vector<MemberDiagnostics> members;
    std::optional<QuantizationVerdict> verdict;
    std::optional<CascadeReport> cascade;
    std::optional<DivergenceTrend> divergence;
    std::vector<std::pair<std::string, TrendFit>> trends;  // named per-k sequences fitted against ln k
};

DiagnosticsReport diagnose(const std::vector<LabMember>& members, const ExperimentConfig& c, int jobs);

nlohmann::json report_to_json(const DiagnosticsReport& r);
/// Per-k rows; the column set is fixed by report_csv_columns.
std::vector<std::string> report_csv_columns(int delta_levels);
void write_report_csv(std::ostream& os, const DiagnosticsReport& r);
nlohmann::json cascade_to_json(const CascadeReport& c);

std::vector<std::string> sweep_csv_columns(int delta_levels);
/// Config of one sweep run.
ExperimentConfig sweep_variant(const ExperimentConfig& base, double value);
inline constexpr long sweep_budget = 10000;

struct CommandOptions {
    std::string config_path;
    std::string out;     // overrides config output when set
    int jobs = 1;
    std::optional<int> grid_n;
    std::optional<std::uint64_t> seed;
};

enum ExitCode { exit_ok = 0, exit_validation = 2, exit_solver = 3, exit_io = 4 };

/// Runs generate | solve | diagnose | sweep | cascade. Errors are reported on err and mapped to exit codes.
int run_command(const std::string& name, const CommandOptions& opts, std::ostream& log, std::ostream& err);

/// Runs fn(i) for i in [0, n) on up to jobs threads. The first exception by index is rethrown.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

} // namespace liouville
