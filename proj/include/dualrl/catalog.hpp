#pragma once

#include <string>
#include <vector>

namespace dualrl {

struct CatalogEntry {
  std::string method;     // registry pattern, e.g. "dualdice:<gen>[:closed]"
  std::string anchor;     // topic slug
  std::string objective;  // plain-text display
  std::string variables;
  std::string oracle;
  std::string tolerance;
};

// Hand-maintained metadata, one entry per registered pattern.
const std::vector<CatalogEntry>& catalog_entries();

// Markdown with one section per registered pattern, in registry order.
// Throws MissingCatalogEntry naming the first pattern without metadata and
// InvalidArgument for entries with empty fields.
std::string emit_catalog(const std::vector<std::string>& registered,
                         const std::vector<CatalogEntry>& entries);
std::string emit_catalog();

}  // namespace dualrl
