#include <string>

#include <fmt/format.h>
#include <json.hpp>

#include "diffwave/error.hpp"
#include "diffwave/profile.hpp"

namespace diffwave {
namespace {

// 17 significant digits, always in exponent form so the digit count is fixed.
std::string num(double x) { return fmt::format("{:.16e}", x); }

void append_array(std::string& out, const char* key, const std::vector<double>& values) {
  out += fmt::format("  \"{}\": [", key);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i % 4 == 0) out += "\n    ";
    out += num(values[i]);
    if (i + 1 < values.size()) out += ", ";
  }
  out += "\n  ]";
}

}  // namespace

std::string profile_to_json(const SelfSimilarProfile& profile) {
  const auto& p = profile.params();
  std::string out = "{\n";
  out += "  \"params\": {\n";
  out += fmt::format("    \"theta_minus\": {},\n", num(p.theta_minus));
  out += fmt::format("    \"theta_plus\": {},\n", num(p.theta_plus));
  out += fmt::format("    \"kappa\": {},\n", num(p.kappa));
  out += fmt::format("    \"eta_max\": {},\n", num(p.eta_max));
  out += fmt::format("    \"n_nodes\": {},\n", p.n_nodes);
  out += fmt::format("    \"tol\": {}\n", num(p.tol));
  out += "  },\n";
  append_array(out, "eta_nodes", profile.eta_nodes());
  out += ",\n";
  append_array(out, "T_values", profile.T_values());
  out += ",\n";
  append_array(out, "Tp_values", profile.Tp_values());
  out += ",\n";
  out += fmt::format("  \"shoot_param\": {},\n", num(profile.shoot_param()));
  out += fmt::format("  \"achieved_mismatch\": {}\n", num(profile.achieved_mismatch()));
  out += "}\n";
  return out;
}

SelfSimilarProfile profile_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  try {
    const auto& jp = doc.at("params");
    ProfileParams p;
    p.theta_minus = jp.at("theta_minus").get<double>();
    p.theta_plus = jp.at("theta_plus").get<double>();
    p.kappa = jp.at("kappa").get<double>();
    p.eta_max = jp.at("eta_max").get<double>();
    p.n_nodes = jp.at("n_nodes").get<int>();
    p.tol = jp.at("tol").get<double>();
    return SelfSimilarProfile(p, doc.at("eta_nodes").get<std::vector<double>>(),
                              doc.at("T_values").get<std::vector<double>>(),
                              doc.at("Tp_values").get<std::vector<double>>(),
                              doc.at("shoot_param").get<double>(),
                              doc.at("achieved_mismatch").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(fmt::format("malformed profile document: {}", e.what()));
  }
}

}  // namespace diffwave
