#include "prml/version.hpp"

namespace prml {

std::string_view build_commit() { return PRML_GIT_COMMIT; }

}  // namespace prml
