#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "betamix/model.hpp"
#include "betamix/priors.hpp"
#include "betamix/sampler.hpp"
#include "betamix/table.hpp"

namespace betamix {

// Model formulas look like
//   logit(y) ~ 1 + x2 + x3 + (1 + x2 | unit)
//   log(phi) ~ 1 + x2
// Terms are column names or the literal 1; one parenthesised block gives the
// random effects and the grouping column.  Parse errors carry the 1-based
// byte offset of the offending token.

struct RandomBlockAst {
  std::vector<std::string> terms;
  std::string group;

  bool operator==(const RandomBlockAst&) const = default;
};

struct FormulaAst {
  std::string link;    // "logit" or "log"
  std::string target;  // response column (location) or a label (precision)
  std::vector<std::string> fixed_terms;
  std::vector<RandomBlockAst> random_blocks;

  bool operator==(const FormulaAst&) const = default;
};

FormulaAst parse_formula(std::string_view text);  // throws SpecError
std::string format_formula(const FormulaAst& ast);

// Scalar prior settings as written in a model file; they are bound to
// concrete dimensions once the design matrices are known.
struct CoefPriorSettings {
  bool student_t = true;
  double dof = 10.0;
  double mean = 0.0;
  double scale_diag = 10.0;
};

struct PriorSettings {
  CoefPriorSettings beta;
  CoefPriorSettings delta;
  std::optional<PhiPrior> phi;
  double psi_b_diag = 20.0;
  double c_b = 5.0;
  double psi_d_diag = 20.0;
  double c_d = 5.0;
  double nu_rate = 0.1;
  bool nu_above_two = false;
};

// One parsed model file: formulas, random-effect laws, priors, sampler
// settings.  Dimensions are resolved against a dataset by build_design.
struct SpecFile {
  FormulaAst location;
  std::optional<FormulaAst> precision;
  RandomEffectLaw b_law = RandomEffectLaw::StudentT;
  RandomEffectLaw d_law = RandomEffectLaw::StudentT;
  bool tie_random_scales = false;
  PriorSettings priors;
  SamplerConfig sampler;
};

// INI-style sections [location] [precision] [priors] [sampler]; unknown keys
// and sections are rejected with their line number.
SpecFile parse_spec_file(std::string_view text);
std::string render_spec_file(const SpecFile& file);

struct DesignBuild {
  GroupedDataset data;
  ModelSpec spec;
  std::vector<std::string> x_names, z_names, w_names, h_names;
  std::string group_column;
  std::string response_column;
};

// Resolve formula terms against table columns and assemble the grouped
// dataset.  Groups are ordered by first appearance in the table.
DesignBuild build_design(const SpecFile& file, const Table& table);

// Size the scalar prior settings to the model's dimensions.
PriorCatalog bind_priors(const SpecFile& file, const ModelSpec& spec);

}  // namespace betamix
