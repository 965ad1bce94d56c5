#include "betamix/specdsl.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <sstream>

namespace betamix {

// ---------------------------------------------------------------------------
// formula parser

namespace {

struct Token {
  enum Kind { Ident, One, LParen, RParen, Tilde, Plus, Bar, End, Bad } kind = End;
  std::string text;
  size_t offset = 0;  // 1-based byte offset
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    Token t;
    t.offset = pos_ + 1;
    if (pos_ >= text_.size()) {
      t.kind = Token::End;
      return t;
    }
    const char c = text_[pos_];
    switch (c) {
      case '(': t.kind = Token::LParen; t.text = "("; ++pos_; return t;
      case ')': t.kind = Token::RParen; t.text = ")"; ++pos_; return t;
      case '~': t.kind = Token::Tilde; t.text = "~"; ++pos_; return t;
      case '+': t.kind = Token::Plus; t.text = "+"; ++pos_; return t;
      case '|': t.kind = Token::Bar; t.text = "|"; ++pos_; return t;
      default: break;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t end = pos_;
      while (end < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[end])) ||
              text_[end] == '_' || text_[end] == '.'))
        ++end;
      t.kind = Token::Ident;
      t.text = std::string(text_.substr(pos_, end - pos_));
      pos_ = end;
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t end = pos_;
      while (end < text_.size() && std::isdigit(static_cast<unsigned char>(text_[end])))
        ++end;
      t.text = std::string(text_.substr(pos_, end - pos_));
      t.kind = t.text == "1" ? Token::One : Token::Bad;
      pos_ = end;
      return t;
    }
    t.kind = Token::Bad;
    t.text = std::string(1, c);
    ++pos_;
    return t;
  }

 private:
  std::string_view text_;
  size_t pos_ = 0;
};

[[noreturn]] void fail_at(const std::string& what, size_t offset) {
  throw SpecError("formula: " + what + " at offset " + std::to_string(offset));
}

class FormulaParser {
 public:
  explicit FormulaParser(std::string_view text) : lexer_(text) { advance(); }

  FormulaAst parse() {
    FormulaAst ast;
    const Token link = expect(Token::Ident, "a link function");
    if (link.text != "logit" && link.text != "log")
      fail_at("unknown link function '" + link.text + "'", link.offset);
    ast.link = link.text;
    expect(Token::LParen, "'('");
    ast.target = expect(Token::Ident, "a response name").text;
    expect(Token::RParen, "')'");
    expect(Token::Tilde, "'~'");
    parse_item(ast);
    while (cur_.kind == Token::Plus) {
      advance();
      parse_item(ast);
    }
    if (cur_.kind != Token::End)
      fail_at("unexpected '" + cur_.text + "'", cur_.offset);
    return ast;
  }

 private:
  void advance() { cur_ = lexer_.next(); }

  Token expect(Token::Kind kind, const std::string& what) {
    if (cur_.kind != kind) {
      if (cur_.kind == Token::End) fail_at("expected " + what, cur_.offset);
      fail_at("expected " + what + ", found '" + cur_.text + "'", cur_.offset);
    }
    Token t = cur_;
    advance();
    return t;
  }

  std::string parse_term(std::vector<std::string>& into) {
    if (cur_.kind != Token::One && cur_.kind != Token::Ident)
      fail_at("expected a term", cur_.offset);
    if (std::find(into.begin(), into.end(), cur_.text) != into.end())
      fail_at("duplicate term '" + cur_.text + "'", cur_.offset);
    std::string text = cur_.text;
    into.push_back(text);
    advance();
    return text;
  }

  void parse_item(FormulaAst& ast) {
    if (cur_.kind != Token::LParen) {
      parse_term(ast.fixed_terms);
      return;
    }
    advance();
    RandomBlockAst block;
    parse_term(block.terms);
    while (cur_.kind == Token::Plus) {
      advance();
      parse_term(block.terms);
    }
    expect(Token::Bar, "'|'");
    block.group = expect(Token::Ident, "a grouping column").text;
    expect(Token::RParen, "')'");
    ast.random_blocks.push_back(std::move(block));
  }

  Lexer lexer_;
  Token cur_;
};

}  // namespace

FormulaAst parse_formula(std::string_view text) { return FormulaParser(text).parse(); }

std::string format_formula(const FormulaAst& ast) {
  std::string out = ast.link + "(" + ast.target + ") ~ ";
  bool first = true;
  for (const std::string& t : ast.fixed_terms) {
    if (!first) out += " + ";
    out += t;
    first = false;
  }
  for (const RandomBlockAst& block : ast.random_blocks) {
    if (!first) out += " + ";
    out += "(";
    for (size_t i = 0; i < block.terms.size(); ++i) {
      if (i) out += " + ";
      out += block.terms[i];
    }
    out += " | " + block.group + ")";
    first = false;
  }
  return out;
}

// ---------------------------------------------------------------------------
// model files

namespace {

[[noreturn]] void fail_line(size_t line, const std::string& what) {
  throw SpecError("line " + std::to_string(line) + ": " + what);
}

std::string trim(std::string s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_num(const std::string& s, size_t line) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    fail_line(line, "'" + s + "' is not a number");
  return v;
}

long parse_int(const std::string& s, size_t line) {
  long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    fail_line(line, "'" + s + "' is not an integer");
  return v;
}

std::uint64_t parse_u64(const std::string& s, size_t line) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    fail_line(line, "'" + s + "' is not an unsigned integer");
  return v;
}

bool parse_bool(const std::string& s, size_t line) {
  if (s == "true") return true;
  if (s == "false") return false;
  fail_line(line, "'" + s + "' is not a boolean (use true/false)");
}

RandomEffectLaw parse_law(const std::string& s, size_t line) {
  if (s == "student_t") return RandomEffectLaw::StudentT;
  if (s == "normal") return RandomEffectLaw::Normal;
  fail_line(line, "unknown random-effect law '" + s + "' (use student_t or normal)");
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> parts;
  std::istringstream in(s);
  std::string w;
  while (in >> w) parts.push_back(w);
  return parts;
}

// accepts "name v1 v2" and "name(v1, v2)" / "name(arg=v1, arg=v2)" forms
PhiPrior parse_phi_prior(const std::string& value, size_t line) {
  std::string name;
  std::vector<std::pair<std::string, std::string>> args;  // key may be empty
  const size_t open = value.find('(');
  if (open != std::string::npos) {
    const size_t close = value.rfind(')');
    if (close == std::string::npos || close < open || !trim(value.substr(close + 1)).empty())
      fail_line(line, "malformed phi prior '" + value + "' (expected name(arg, ...))");
    name = trim(value.substr(0, open));
    std::string inside = value.substr(open + 1, close - open - 1);
    size_t start = 0;
    while (start <= inside.size()) {
      size_t comma = inside.find(',', start);
      if (comma == std::string::npos) comma = inside.size();
      const std::string item = trim(inside.substr(start, comma - start));
      if (!item.empty()) {
        const size_t eq = item.find('=');
        if (eq == std::string::npos)
          args.emplace_back("", item);
        else
          args.emplace_back(trim(item.substr(0, eq)), trim(item.substr(eq + 1)));
      }
      start = comma + 1;
    }
  } else {
    const std::vector<std::string> parts = split_ws(value);
    if (parts.empty()) fail_line(line, "empty phi prior");
    name = parts[0];
    for (size_t i = 1; i < parts.size(); ++i) args.emplace_back("", parts[i]);
  }

  auto fill = [&](std::initializer_list<const char*> fields) {
    std::vector<double> out(fields.size());
    std::vector<bool> set(fields.size(), false);
    size_t next_positional = 0;
    for (const auto& [key, text] : args) {
      size_t slot = fields.size();
      if (key.empty()) {
        slot = next_positional++;
      } else {
        size_t k = 0;
        for (const char* f : fields) {
          if (key == f) slot = k;
          ++k;
        }
        if (slot == fields.size())
          fail_line(line, "phi prior '" + name + "' has no argument '" + key + "'");
        next_positional = slot + 1;
      }
      if (slot >= fields.size())
        fail_line(line, "phi prior '" + name + "' takes " +
                            std::to_string(fields.size()) + " arguments");
      if (set[slot]) fail_line(line, "phi prior '" + name + "' argument given twice");
      out[slot] = parse_num(text, line);
      set[slot] = true;
    }
    for (size_t k = 0; k < fields.size(); ++k)
      if (!set[k])
        fail_line(line, "phi prior '" + name + "' is missing argument '" +
                            *(fields.begin() + k) + "'");
    return out;
  };
  auto require = [&](bool ok, const char* what) {
    if (!ok) fail_line(line, "phi prior '" + name + "': " + what);
  };

  if (name == "inverse_gamma") {
    const auto v = fill({"eps"});
    require(v[0] > 0.0, "eps must be positive");
    return InverseGammaPhiPrior{v[0]};
  }
  if (name == "uniform_squared") {
    const auto v = fill({"a"});
    require(v[0] > 0.0, "a must be positive");
    return UniformSquaredPhiPrior{v[0]};
  }
  if (name == "scaled_beta_squared") {
    const auto v = fill({"a", "eps"});
    require(v[0] > 0.0, "a must be positive");
    require(v[1] >= 0.0, "eps must be non-negative");
    return ScaledBetaSquaredPhiPrior{v[0], v[1]};
  }
  if (name == "log_t") {
    const auto v = fill({"dof", "mu", "sigma2"});
    require(v[0] > 0.0, "dof must be positive");
    require(v[2] > 0.0, "sigma2 must be positive");
    return LogTPhiPrior{v[0], v[1], v[2]};
  }
  fail_line(line, "unknown phi prior '" + name +
                      "' (inverse_gamma, uniform_squared, scaled_beta_squared, log_t)");
}

CoefPriorSettings parse_coef_prior(const std::string& value, size_t line) {
  const std::vector<std::string> parts = split_ws(value);
  CoefPriorSettings out;
  if (parts.size() == 4 && parts[0] == "t") {
    out.student_t = true;
    out.dof = parse_num(parts[1], line);
    out.mean = parse_num(parts[2], line);
    out.scale_diag = parse_num(parts[3], line);
    return out;
  }
  if (parts.size() == 3 && parts[0] == "normal") {
    out.student_t = false;
    out.mean = parse_num(parts[1], line);
    out.scale_diag = parse_num(parts[2], line);
    return out;
  }
  fail_line(line, "coefficient prior must be 't DOF MEAN SCALE' or 'normal MEAN SCALE'");
}

std::string phi_prior_to_text(const PhiPrior& prior) {
  struct Visitor {
    std::string operator()(const InverseGammaPhiPrior& p) const {
      return "inverse_gamma " + format_double(p.eps);
    }
    std::string operator()(const UniformSquaredPhiPrior& p) const {
      return "uniform_squared " + format_double(p.a);
    }
    std::string operator()(const ScaledBetaSquaredPhiPrior& p) const {
      return "scaled_beta_squared " + format_double(p.a) + " " + format_double(p.eps);
    }
    std::string operator()(const LogTPhiPrior& p) const {
      return "log_t " + format_double(p.dof) + " " + format_double(p.mu) + " " +
             format_double(p.sigma2);
    }
  };
  return std::visit(Visitor{}, prior);
}

std::string coef_prior_to_text(const CoefPriorSettings& p) {
  if (p.student_t)
    return "t " + format_double(p.dof) + " " + format_double(p.mean) + " " +
           format_double(p.scale_diag);
  return "normal " + format_double(p.mean) + " " + format_double(p.scale_diag);
}

}  // namespace

SpecFile parse_spec_file(std::string_view text) {
  SpecFile file;
  file.sampler = SamplerConfig{};
  long burn_in_raw = -1;

  std::map<std::string, std::map<std::string, std::pair<std::string, size_t>>> sections;
  std::vector<std::string> section_order;
  {
    std::string current;
    std::istringstream in{std::string(text)};
    std::string raw;
    size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      if (const size_t hash = raw.find('#'); hash != std::string::npos)
        raw.erase(hash);
      const std::string line = trim(raw);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') fail_line(line_no, "unterminated section header");
        current = trim(line.substr(1, line.size() - 2));
        if (current != "location" && current != "precision" && current != "priors" &&
            current != "sampler")
          fail_line(line_no, "unknown section [" + current + "]");
        if (sections.count(current)) fail_line(line_no, "duplicate section [" + current + "]");
        sections[current];
        section_order.push_back(current);
        continue;
      }
      const size_t eq = line.find('=');
      if (eq == std::string::npos) fail_line(line_no, "expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) fail_line(line_no, "empty key");
      if (current.empty()) fail_line(line_no, "key '" + key + "' outside any section");
      auto [it, inserted] = sections[current].emplace(key, std::make_pair(value, line_no));
      if (!inserted) fail_line(line_no, "duplicate key '" + key + "'");
    }
  }

  auto take = [&](const std::string& section, const std::string& key)
      -> std::optional<std::pair<std::string, size_t>> {
    auto sit = sections.find(section);
    if (sit == sections.end()) return std::nullopt;
    auto kit = sit->second.find(key);
    if (kit == sit->second.end()) return std::nullopt;
    auto out = kit->second;
    sit->second.erase(kit);
    return out;
  };

  if (!sections.count("location")) throw SpecError("missing [location] section");
  {
    auto formula = take("location", "formula");
    if (!formula) throw SpecError("missing formula in [location]");
    file.location = parse_formula(formula->first);
    if (file.location.link != "logit")
      fail_line(formula->second, "the location formula must use the logit link");
    if (auto law = take("location", "law"))
      file.b_law = parse_law(law->first, law->second);
  }

  if (sections.count("precision")) {
    auto formula = take("precision", "formula");
    if (!formula) throw SpecError("missing formula in [precision]");
    file.precision = parse_formula(formula->first);
    if (file.precision->link != "log")
      fail_line(formula->second, "the precision formula must use the log link");
    if (auto law = take("precision", "law"))
      file.d_law = parse_law(law->first, law->second);
    if (auto tie = take("precision", "tie"))
      file.tie_random_scales = parse_bool(tie->first, tie->second);
  }

  if (auto v = take("priors", "beta")) file.priors.beta = parse_coef_prior(v->first, v->second);
  if (auto v = take("priors", "delta"))
    file.priors.delta = parse_coef_prior(v->first, v->second);
  auto phi_entry = take("priors", "phi");
  if (auto alias = take("priors", "phi_prior")) {
    if (phi_entry) fail_line(alias->second, "give either phi or phi_prior, not both");
    phi_entry = alias;
  }
  if (phi_entry) {
    if (file.precision.has_value())
      fail_line(phi_entry->second, "phi prior conflicts with the [precision] section");
    file.priors.phi = parse_phi_prior(phi_entry->first, phi_entry->second);
  }
  if (auto v = take("priors", "sigma_b_psi_diag"))
    file.priors.psi_b_diag = parse_num(v->first, v->second);
  if (auto v = take("priors", "sigma_b_dof")) file.priors.c_b = parse_num(v->first, v->second);
  if (auto v = take("priors", "sigma_d_psi_diag"))
    file.priors.psi_d_diag = parse_num(v->first, v->second);
  if (auto v = take("priors", "sigma_d_dof")) file.priors.c_d = parse_num(v->first, v->second);
  if (auto v = take("priors", "nu_rate")) file.priors.nu_rate = parse_num(v->first, v->second);
  if (auto v = take("priors", "nu_above_two"))
    file.priors.nu_above_two = parse_bool(v->first, v->second);

  if (auto v = take("sampler", "iterations"))
    file.sampler.iterations = parse_int(v->first, v->second);
  if (auto v = take("sampler", "burn_in")) burn_in_raw = parse_int(v->first, v->second);
  if (auto v = take("sampler", "thin")) file.sampler.thin = parse_int(v->first, v->second);
  if (auto v = take("sampler", "chains"))
    file.sampler.chains = static_cast<int>(parse_int(v->first, v->second));
  if (auto v = take("sampler", "seed")) file.sampler.seed = parse_u64(v->first, v->second);
  if (auto v = take("sampler", "adapt_window"))
    file.sampler.adapt_window = parse_int(v->first, v->second);

  for (const std::string& section : section_order)
    for (const auto& [key, value] : sections[section])
      fail_line(value.second, "unknown key '" + key + "' in [" + section + "]");

  file.sampler.burn_in = burn_in_raw >= 0 ? burn_in_raw : file.sampler.iterations / 10;
  return file;
}

std::string render_spec_file(const SpecFile& file) {
  std::ostringstream out;
  out << "[location]\n";
  out << "formula = " << format_formula(file.location) << "\n";
  out << "law = " << (file.b_law == RandomEffectLaw::StudentT ? "student_t" : "normal")
      << "\n";
  if (file.precision) {
    out << "\n[precision]\n";
    out << "formula = " << format_formula(*file.precision) << "\n";
    out << "law = " << (file.d_law == RandomEffectLaw::StudentT ? "student_t" : "normal")
        << "\n";
    out << "tie = " << (file.tie_random_scales ? "true" : "false") << "\n";
  }
  out << "\n[priors]\n";
  out << "beta = " << coef_prior_to_text(file.priors.beta) << "\n";
  if (file.priors.phi) out << "phi = " << phi_prior_to_text(*file.priors.phi) << "\n";
  if (file.precision) out << "delta = " << coef_prior_to_text(file.priors.delta) << "\n";
  out << "sigma_b_psi_diag = " << format_double(file.priors.psi_b_diag) << "\n";
  out << "sigma_b_dof = " << format_double(file.priors.c_b) << "\n";
  if (file.precision && !file.tie_random_scales && !file.precision->random_blocks.empty()) {
    out << "sigma_d_psi_diag = " << format_double(file.priors.psi_d_diag) << "\n";
    out << "sigma_d_dof = " << format_double(file.priors.c_d) << "\n";
  }
  out << "nu_rate = " << format_double(file.priors.nu_rate) << "\n";
  out << "nu_above_two = " << (file.priors.nu_above_two ? "true" : "false") << "\n";
  out << "\n[sampler]\n";
  out << "iterations = " << file.sampler.iterations << "\n";
  out << "burn_in = " << file.sampler.burn_in << "\n";
  out << "thin = " << file.sampler.thin << "\n";
  out << "chains = " << file.sampler.chains << "\n";
  out << "seed = " << file.sampler.seed << "\n";
  out << "adapt_window = " << file.sampler.adapt_window << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// design assembly

namespace {

struct TermColumns {
  std::vector<std::string> names;
  std::vector<int> columns;  // -1 marks the constant term
};

TermColumns resolve_terms(const std::vector<std::string>& terms, const Table& table,
                          const std::string& where) {
  TermColumns out;
  for (const std::string& term : terms) {
    out.names.push_back(term);
    if (term == "1") {
      out.columns.push_back(-1);
      continue;
    }
    const int col = table.column_index(term);
    if (col < 0) {
      std::string have;
      for (const std::string& c : table.columns()) {
        if (!have.empty()) have += ", ";
        have += c;
      }
      throw DataError("column '" + term + "' (" + where +
                      ") not found in the data; available columns: " + have);
    }
    out.columns.push_back(col);
  }
  return out;
}

Vector row_values(const TermColumns& terms, const Table& table, size_t row) {
  Vector v(static_cast<long>(terms.columns.size()));
  for (size_t k = 0; k < terms.columns.size(); ++k)
    v[static_cast<long>(k)] =
        terms.columns[k] < 0 ? 1.0 : table.numeric(row, terms.columns[k]);
  return v;
}

}  // namespace

DesignBuild build_design(const SpecFile& file, const Table& table) {
  if (file.location.random_blocks.empty())
    throw SpecError("the location formula needs a random-effects block");

  std::string group_column = file.location.random_blocks.front().group;
  std::vector<std::string> z_terms, h_terms;
  for (const RandomBlockAst& block : file.location.random_blocks) {
    if (block.group != group_column)
      throw SpecError("all random-effects blocks must share one grouping column");
    z_terms.insert(z_terms.end(), block.terms.begin(), block.terms.end());
  }
  if (file.precision)
    for (const RandomBlockAst& block : file.precision->random_blocks) {
      if (block.group != group_column)
        throw SpecError("all random-effects blocks must share one grouping column");
      h_terms.insert(h_terms.end(), block.terms.begin(), block.terms.end());
    }

  const int group_col = table.column_index(group_column);
  if (group_col < 0)
    throw DataError("grouping column '" + group_column + "' not found in the data");
  const int y_col = table.column_index(file.location.target);
  if (y_col < 0)
    throw DataError("response column '" + file.location.target + "' not found in the data");

  const TermColumns x_terms = resolve_terms(file.location.fixed_terms, table, "location");
  const TermColumns z_cols = resolve_terms(z_terms, table, "location random effects");
  TermColumns w_terms, h_cols;
  if (file.precision) {
    w_terms = resolve_terms(file.precision->fixed_terms, table, "precision");
    h_cols = resolve_terms(h_terms, table, "precision random effects");
  }

  std::vector<Group> groups;
  std::map<std::string, size_t> index_of;
  for (size_t row = 0; row < table.n_rows(); ++row) {
    const std::string& key = table.cell(row, group_col);
    auto [it, inserted] = index_of.emplace(key, groups.size());
    if (inserted) {
      Group g;
      g.unit_id = key;
      groups.push_back(std::move(g));
    }
    Group& g = groups[it->second];
    g.responses.push_back(table.numeric(row, y_col));
    g.x_rows.push_back(row_values(x_terms, table, row));
    g.z_rows.push_back(row_values(z_cols, table, row));
    if (file.precision) {
      if (!w_terms.names.empty()) g.w_rows.push_back(row_values(w_terms, table, row));
      if (!h_cols.names.empty()) g.h_rows.push_back(row_values(h_cols, table, row));
    }
  }

  ModelSpec spec;
  spec.p = static_cast<int>(x_terms.names.size());
  spec.q = static_cast<int>(z_cols.names.size());
  spec.b_law = file.b_law;
  spec.d_law = file.d_law;
  if (file.precision) {
    spec.precision.regression = true;
    spec.precision.p_star = static_cast<int>(w_terms.names.size());
    spec.precision.q_star = static_cast<int>(h_cols.names.size());
    spec.tie_random_scales = file.tie_random_scales;
  }
  spec.validate();

  DesignBuild out{GroupedDataset(std::move(groups)),
                  spec,
                  x_terms.names,
                  z_cols.names,
                  w_terms.names,
                  h_cols.names,
                  group_column,
                  file.location.target};
  out.data.check_compatible(spec);
  return out;
}

PriorCatalog bind_priors(const SpecFile& file, const ModelSpec& spec) {
  spec.validate();
  PriorCatalog catalog;
  auto bind_coef = [](const CoefPriorSettings& s, int dim) {
    FixedEffectPrior p;
    p.student_t = s.student_t;
    p.dof = s.dof;
    p.mean = Vector::Constant(dim, s.mean);
    p.scale = s.scale_diag * Matrix::Identity(dim, dim);
    return p;
  };
  catalog.beta_prior = bind_coef(file.priors.beta, spec.p);
  if (!spec.precision.regression) {
    catalog.phi_prior = file.priors.phi.has_value()
                            ? *file.priors.phi
                            : PhiPrior(ScaledBetaSquaredPhiPrior{50.0, 0.5});
  } else if (spec.precision.p_star > 0) {
    catalog.delta_prior = bind_coef(file.priors.delta, spec.precision.p_star);
  }
  catalog.psi_b = file.priors.psi_b_diag * Matrix::Identity(spec.q, spec.q);
  catalog.c_b = file.priors.c_b;
  if (spec.precision.regression && spec.precision.q_star > 0 && !spec.tie_random_scales) {
    catalog.psi_d = file.priors.psi_d_diag *
                    Matrix::Identity(spec.precision.q_star, spec.precision.q_star);
    catalog.c_d = file.priors.c_d;
  }
  catalog.nu_rate = file.priors.nu_rate;
  catalog.nu_above_two = file.priors.nu_above_two;
  catalog.validate(spec);
  return catalog;
}

}  // namespace betamix
