#include "dualrl/catalog.hpp"

#include <algorithm>
#include <sstream>

#include "dualrl/error.hpp"
#include "dualrl/methods.hpp"

namespace dualrl {

const std::vector<CatalogEntry>& catalog_entries() {
  static const std::vector<CatalogEntry> entries = {
      {"lagrangian:reward", "q-lp-lagrangian",
       "min_Q max_zeta (1-g) E_{mu0,pi}[Q] + E_D[zeta (R + g P^pi Q - Q)]",
       "Q (state-action), zeta (state-action, free)", "exact_value, exact_visitation",
       "value within 1e-3"},
      {"lagrangian:zero", "q-lp-lagrangian-zero-reward",
       "min_Q max_zeta (1-g) E_{mu0,pi}[Q] + E_D[zeta (g P^pi Q - Q)]; value E_D[zeta R]",
       "Q (state-action), zeta (state-action, free)", "exact_value, exact_visitation",
       "value within 1e-3"},
      {"lagrangian:fdiv:<gen>", "regularized-lagrangian",
       "min_Q max_zeta (1-g) E_{mu0,pi}[Q] + E_D[zeta (g P^pi Q - Q)] - E_D[f(zeta)]",
       "Q (state-action), zeta = exp(w) (state-action)",
       "exact_value, f_divergence of the visitation", "value within 1e-3; saddle value 1e-4"},
      {"dualdice:<gen>[:closed]", "dualdice",
       "min_Q (1-g) E_{mu0,pi}[Q] + E_D[f*(g P^pi Q - Q)]; zeta = f*'(g P^pi Q - Q)",
       "Q (state-action)", "exact_visitation / d^D",
       "closed form 1e-8; iterative 1e-3; dual value 1e-4"},
      {"algaedice:<gen>[:noreward]", "algaedice",
       "max_pi min_Q (1-g) E_{mu0,pi}[Q] + E_D[alpha f*((r + g P^pi Q - Q) / alpha)]",
       "policy logits (state-action), Q (state-action)", "exact_regularized_optimum",
       "oracle value of the returned policy within 1e-3 of the sweep maximum"},
      {"klqlp", "kl-q-lp",
       "max_pi min_Q (1-g) E_{mu0,pi}[Q] + log E_D[exp(R + g P^pi Q - Q)]",
       "policy logits (state-action), Q (state-action)", "exact_regularized_optimum",
       "oracle value of the returned policy within 1e-3 of the sweep maximum"},
      {"vlp:<gen>", "v-lp-dual",
       "min_{V, K >= 0} (1-g) E_mu0[V] + E_D[f*(K + R + g T V - V)]; d = d^D f*'(.)",
       "V (state), K = exp(k) (state-action)", "exact_regularized_optimum",
       "objective 1e-4; flow residual 1e-4"},
      {"reps", "reps", "min_V (1-g) E_mu0[V] + log E_D[exp(R + g T V - V)]", "V (state)",
       "exact_regularized_optimum (kl)", "objective 1e-4; flow residual 1e-4; mass 1e-6"},
      {"vlp-eval", "v-lp-evaluation",
       "min_V max_mu (1-g) E_mu0[V] + sum_s mu(s) (E_{a~pi}[R + g T V] - V(s))",
       "V (state), mu = d^D zeta (state)", "exact_value", "value within 1e-3"},
      {"undisc-dual:<gen>", "average-reward-dual",
       "min_{Q, lambda} -lambda + E_D[f*(lambda + P^pi Q - Q)]; zeta = f*'(.)",
       "Q (state-action, Q[0] pinned), lambda (scalar)", "exact_stationary / d^D",
       "ratio 1e-2; normalization 1e-3"},
      {"undisc-lagrangian", "average-reward-lagrangian",
       "max_zeta min_{Q, lambda} -lambda + E_D[zeta (lambda + P^pi Q - Q) - f(zeta)]",
       "Q (state-action, Q[0] pinned), lambda (scalar), zeta = exp(w) (state-action)",
       "exact_stationary / d^D", "ratio 1e-2; normalization 1e-3"},
      {"undisc-lagrangian:gendice", "gendice",
       "max_zeta min_{Q, lambda} -lambda + lambda^2/2 + E_D[zeta (lambda + P^pi Q - Q + Q^2/4)]",
       "Q (state-action), lambda (scalar), zeta = exp(w) (state-action)",
       "exact_stationary / d^D", "ratio 1e-2; agreement with plain mode 1e-2"},
      {"undisc-opt:<gen>", "average-reward-policy-optimization",
       "max_pi min_{Q, lambda} -lambda + E_D[f*(lambda + R + P^pi Q - Q)]",
       "policy logits (state-action), Q (state-action, Q[0] pinned), lambda (scalar)",
       "exact_regularized_optimum (undiscounted), exact_average_reward",
       "oracle value of the returned policy within 1e-3 of the sweep maximum"},
      {"undisc-reps", "average-reward-reps", "min_V log E_D[exp(R + T V - V)]",
       "V (state, V[0] pinned)", "exact_regularized_optimum (undiscounted kl)",
       "objective 1e-4; flow residual 1e-4"},
  };
  return entries;
}

std::string emit_catalog(const std::vector<std::string>& registered,
                         const std::vector<CatalogEntry>& entries) {
  std::ostringstream out;
  out << "# Objective catalog\n\n"
      << "Generated from the method registry by `dualrl catalog`. <gen> is one of "
         "square, chisquare, kl, pnorm:<p>.\n";
  for (const std::string& method : registered) {
    const auto it = std::find_if(entries.begin(), entries.end(),
                                 [&](const CatalogEntry& e) { return e.method == method; });
    if (it == entries.end()) {
      throw Error(ErrorKind::kMissingCatalogEntry, "no catalog entry for method " + method);
    }
    for (const std::string* field :
         {&it->anchor, &it->objective, &it->variables, &it->oracle, &it->tolerance}) {
      if (field->empty()) {
        throw Error(ErrorKind::kInvalidArgument, "catalog entry for " + method + " has an empty field");
      }
    }
    out << "\n## `" << method << "`\n\n"
        << "- anchor: `" << it->anchor << "`\n"
        << "- objective: `" << it->objective << "`\n"
        << "- variables: " << it->variables << "\n"
        << "- oracle: " << it->oracle << "\n"
        << "- tolerance: " << it->tolerance << "\n";
  }
  return out.str();
}

std::string emit_catalog() { return emit_catalog(registered_method_patterns(), catalog_entries()); }

}  // namespace dualrl
