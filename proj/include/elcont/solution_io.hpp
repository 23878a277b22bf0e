#pragma once

// "elcont-solution v1" text format: a mesh block followed by the parameter
// value and one nodal value per mesh point.

#include <iosfwd>
#include <string>
#include <vector>

#include "elcont/geometry.hpp"

namespace elcont {

struct Solution {
  Mesh mesh;
  double mu = 0.0;
  std::vector<double> values;
};

void write_solution(std::ostream& os, const Mesh& mesh, double mu,
                    const std::vector<double>& values);
Solution read_solution(std::istream& is);
void save_solution(const std::string& path, const Mesh& mesh, double mu,
                   const std::vector<double>& values);
Solution load_solution(const std::string& path);

}  // namespace elcont
