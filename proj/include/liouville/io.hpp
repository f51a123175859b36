#pragma once

#include "liouville/exact_families.hpp"
#include "liouville/field.hpp"
#include "liouville/solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace liouville {

inline constexpr const char* config_schema = "liouville-lab/1";
inline constexpr const char* field_format = "liouville-field/1";

struct ExperimentConfig {
    enum class FamilyKind { Developing, Bubble, Constant };
    enum class Mode { Exact, Solve, Both };

    std::string schema = config_schema;
    FamilyKind kind = FamilyKind::Developing;
    FamilyRule rule;
    int bubble_alpha = 0;         // Bubble: pole of this multiplicity at the origin
    double constant_value = 0.0;  // Constant: the field value
    double amplitude = 1.0;       // W = amplitude * prod |x - p|^{2 alpha}

    int grid_n = 129;
    double grid_r = 1.0;
    Mode mode = Mode::Exact;
    std::vector<std::string> diagnostics;  // empty means all

    double delta_r = 0.0;  // 0: grid radius
    int delta_levels = 6;

    // tolerances
    double newton_tolerance = 1e-9;
    int newton_max_iterations = 50;
    bool continuation = true;
    double plateau_slope = 0.05;
    double ladder_tolerance = 1e-3;
    double pointwise_eps = 0.1;
    double exclusion_l0 = 4.0;

    // solve
    std::string boundary = "exact";  // exact | constant
    double boundary_value = 0.0;
    std::string guess = "perturbed";  // perturbed | harmonic
    double guess_bump = 0.3;

    std::string output = "out";
    std::uint64_t seed = 1;

    // sweep
    std::string sweep_parameter;  // degree | lambda0
    std::vector<double> sweep_values;

    void validate() const;
    bool wants(const std::string& diagnostic) const;
};

const std::vector<std::string>& known_diagnostics();

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);

/// Field file: a "# {json}" header line, a column line, then x,y,value,kind per inside node.
struct FieldHeader {
    int k = 0;
    std::string source;  // exact | solve
    int n = 0;
    double r = 1.0;
};

void write_field_csv(std::ostream& os, const ScalarField& f, const FieldHeader& h);
void write_field_csv(const std::string& path, const ScalarField& f, const FieldHeader& h);
struct LoadedField {
    FieldHeader header;
    std::shared_ptr<const DiskGrid> grid;
    std::vector<double> values;
};
LoadedField read_field_csv(std::istream& is, const std::string& name = "field");
LoadedField read_field_csv(const std::string& path);

nlohmann::json convergence_to_json(int k, const ConvergenceRecord& r);

/// %.17g, with non-finite values spelled nan / inf / -inf.
std::string format_number(double v);
/// JSON cannot hold NaN; such entries become null.
nlohmann::json number_or_null(double v);

void write_text_file(const std::string& path, const std::string& content);

} // namespace liouville
