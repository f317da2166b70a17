#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "soskit/conic.hpp"

namespace soskit {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

char cone_tag(ConeKind k) {
  switch (k) {
    case ConeKind::kZero: return 'z';
    case ConeKind::kNonneg: return 'l';
    case ConeKind::kSecondOrder: return 'q';
    case ConeKind::kPsd: return 's';
  }
  return '?';
}

}  // namespace

void write_conic(std::ostream& out, const ConicProblem& p) {
  p.validate();
  out << "soskit-conic 1\n";
  out << p.num_vars() << " " << p.num_rows() << " " << p.A.nonZeros() << "\n";
  out << "cones " << p.cones.size() << "\n";
  for (const auto& c : p.cones) out << cone_tag(c.kind) << " " << c.size << "\n";
  out << "c\n";
  for (int i = 0; i < p.num_vars(); ++i) out << fmt(p.c(i)) << "\n";
  out << "b\n";
  for (int i = 0; i < p.num_rows(); ++i) out << fmt(p.b(i)) << "\n";
  out << "A\n";
  for (int k = 0; k < p.A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(p.A, k); it; ++it)
      out << it.row() << " " << it.col() << " " << fmt(it.value()) << "\n";
}

ConicProblem read_conic(std::istream& in) {
  auto fail = [](const std::string& what) { throw std::runtime_error("read_conic: " + what); };
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "soskit-conic" || version != 1) fail("bad header");
  long n = 0, m = 0, nnz = 0;
  if (!(in >> n >> m >> nnz) || n < 0 || m < 0 || nnz < 0) fail("bad dimensions");
  std::string word;
  std::size_t ncones = 0;
  if (!(in >> word >> ncones) || word != "cones") fail("expected cone list");
  ConicProblem p;
  for (std::size_t k = 0; k < ncones; ++k) {
    char tag;
    int size;
    if (!(in >> tag >> size)) fail("bad cone line");
    ConeKind kind;
    switch (tag) {
      case 'z': kind = ConeKind::kZero; break;
      case 'l': kind = ConeKind::kNonneg; break;
      case 'q': kind = ConeKind::kSecondOrder; break;
      case 's': kind = ConeKind::kPsd; break;
      default: fail(std::string("unknown cone tag ") + tag);
    }
    p.cones.push_back({kind, size});
  }
  p.c.resize(n);
  p.b.resize(m);
  if (!(in >> word) || word != "c") fail("expected c section");
  for (long i = 0; i < n; ++i)
    if (!(in >> p.c(i))) fail("truncated c");
  if (!(in >> word) || word != "b") fail("expected b section");
  for (long i = 0; i < m; ++i)
    if (!(in >> p.b(i))) fail("truncated b");
  if (!(in >> word) || word != "A") fail("expected A section");
  std::vector<Eigen::Triplet<double>> trip;
  for (long k = 0; k < nnz; ++k) {
    long i, j;
    double v;
    if (!(in >> i >> j >> v)) fail("truncated A");
    if (i < 0 || i >= m || j < 0 || j >= n) fail("A index out of range");
    trip.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
  }
  p.A.resize(m, n);
  p.A.setFromTriplets(trip.begin(), trip.end());
  p.validate();
  return p;
}

}  // namespace soskit
