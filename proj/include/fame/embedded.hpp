#pragma once

#include <string_view>

namespace fame {

// Contents of a file under data/ compiled into the library, keyed by its
// path relative to data/ (e.g. "countries.csv"). Throws fame::Error if the
// name is unknown.
std::string_view embedded_data(std::string_view name);

}  // namespace fame
