#pragma once

#include <istream>
#include <string>
#include <vector>

#include "bpa/procrustes.hpp"

namespace bpa {

/// Parses the plain-text correspondence format: one record per line,
/// `#` comments and blank lines skipped. A record is either
///
///   mx my mz  sx sy sz  sigma
///
/// or, with an oriented-frame measurement (frame quaternions scalar-first,
/// noise concentrations along the canonical identity-centered directions
/// j, k, i),
///
///   mx my mz  sx sy sz  sigma  qxw qxx qxy qxz  qyw qyx qyy qyz  l1 l2 l3
///
/// Malformed lines raise InvalidInputError naming the line number.
std::vector<Correspondence> parse_correspondences(std::istream& in);

std::vector<Correspondence> load_correspondence_file(const std::string& path);

}  // namespace bpa
