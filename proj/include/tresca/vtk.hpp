#pragma once

#include <fstream>
#include <ostream>
#include <string>

#include "tresca/contact.hpp"
#include "tresca/elasticity.hpp"
#include "tresca/errors.hpp"
#include "tresca/mesh.hpp"

namespace tresca {

// Legacy ASCII VTK unstructured grid: triangle cells with vertex displacement
// vectors; contact facets with multiplier data are appended as line cells.
inline void export_vtk(std::ostream& os, const Mesh& mesh,
                       const DiscreteSolution& solution,
                       const MultiplierField& multipliers = {}) {
  const int nv = mesh.num_vertices();
  const int nt = mesh.num_triangles();
  const int nl = static_cast<int>(multipliers.facets.size());

  os << "# vtk DataFile Version 3.0\n";
  os << "tresca solution\n";
  os << "ASCII\n";
  os << "DATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << nv << " double\n";
  for (const auto& v : mesh.vertices())
    os << detail::format_double(v.x()) << " " << detail::format_double(v.y())
       << " 0\n";

  os << "CELLS " << nt + nl << " " << 4 * nt + 3 * nl << "\n";
  for (const auto& t : mesh.triangles())
    os << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  for (const auto& f : multipliers.facets) {
    const auto& bf = mesh.boundary_facets()[f.facet_id];
    os << "2 " << bf.a << " " << bf.b << "\n";
  }
  os << "CELL_TYPES " << nt + nl << "\n";
  for (int t = 0; t < nt; ++t) os << "5\n";
  for (int f = 0; f < nl; ++f) os << "3\n";

  os << "POINT_DATA " << nv << "\n";
  os << "VECTORS displacement double\n";
  for (int v = 0; v < nv; ++v) {
    const double ux = solution.space != nullptr
                          ? solution.coefficients[FeSpace::dof(v, 0)]
                          : 0.0;
    const double uy = solution.space != nullptr
                          ? solution.coefficients[FeSpace::dof(v, 1)]
                          : 0.0;
    os << detail::format_double(ux) << " " << detail::format_double(uy)
       << " 0\n";
  }

  if (nl > 0) {
    os << "CELL_DATA " << nt + nl << "\n";
    os << "SCALARS lambda_n double 1\nLOOKUP_TABLE default\n";
    for (int t = 0; t < nt; ++t) os << "0\n";
    for (const auto& f : multipliers.facets)
      os << detail::format_double(eval_facet_poly(f.lambda_n_poly, 0.5)) << "\n";
    os << "SCALARS lambda_t double 1\nLOOKUP_TABLE default\n";
    for (int t = 0; t < nt; ++t) os << "0\n";
    for (const auto& f : multipliers.facets)
      os << detail::format_double(eval_facet_poly(f.lambda_t_poly, 0.5)) << "\n";
  }
}

inline void export_vtk(const std::string& path, const Mesh& mesh,
                       const DiscreteSolution& solution,
                       const MultiplierField& multipliers = {}) {
  std::ofstream os(path);
  if (!os) throw io_error("cannot open '" + path + "' for writing");
  export_vtk(os, mesh, solution, multipliers);
  os.flush();
  if (!os) throw io_error("failed writing '" + path + "'");
}

}  // namespace tresca
