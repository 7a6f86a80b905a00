#include "ccm/synthesis.hpp"

#include "ccm/errors.hpp"
#include "ccm/io.hpp"

#include <sstream>

namespace ccm {
namespace {

// Symmetric basis matrix for variable (p, q), p <= q: unit entries at
// (p, q) and (q, p).
Matrix sym_basis(int n, int p, int q) {
  Matrix e = Matrix::Zero(n, n);
  e(p, q) = 1.0;
  e(q, p) = 1.0;
  return e;
}

struct Block {
  // X = sum_k x_k F[k+1] - F[0] >= 0; F[0] stored first.
  std::vector<Matrix> f;
};

void append_entries(std::ostringstream& out, int mat_no, int blk_no,
                    const Matrix& f) {
  for (int i = 0; i < f.rows(); ++i) {
    for (int j = i; j < f.cols(); ++j) {
      if (f(i, j) == 0.0) continue;
      out << mat_no << " " << blk_no << " " << i + 1 << " " << j + 1 << " "
          << format_double(f(i, j)) << "\n";
    }
  }
}

}  // namespace

void export_sdpa(const ControlAffineSystem& sys, double lambda,
                 const std::vector<Vector>& grid,
                 const SynthesisOptions& options, const std::string& path) {
  if (options.degree != 0) {
    throw NotImplementedError(
        "export_sdpa: only degree-0 (constant W, constant rho) problems are "
        "supported");
  }
  if (grid.empty()) {
    throw InvalidInputError("export_sdpa: empty grid");
  }
  const int q = sys.manifold.n_dim;
  const int n_w = q * (q + 1) / 2;
  const int n_vars = n_w + 1;  // upper triangle of W, then rho
  const Matrix eye = Matrix::Identity(q, q);

  struct PointOps {
    Matrix s_f;
    std::vector<Matrix> s_b;
    Matrix ee_t;
  };
  std::vector<PointOps> ops;
  ops.reserve(grid.size());
  double max_s_b = 0.0;
  for (const Vector& x : grid) {
    PointOps p;
    p.s_f = reduced_drift(sys, x, 0.0);
    const Matrix e = factor_E(sys, x, 0.0);
    p.ee_t = e * e.transpose();
    for (int i = 0; i < sys.m; ++i) {
      p.s_b.push_back(reduced_input(sys, x, 0.0, i));
      max_s_b = std::max(max_s_b, p.s_b.back().norm());
    }
    ops.push_back(std::move(p));
  }
  const bool killing_blocks = max_s_b > 1e-14;

  std::vector<Block> blocks;
  // One contraction block per grid point: -R1 - eps_margin I >= 0.
  for (const PointOps& p : ops) {
    Block blk;
    blk.f.push_back(options.eps_margin * eye);  // F0
    for (int r = 0; r < q; ++r) {
      for (int c = r; c < q; ++c) {
        const Matrix e_rc = sym_basis(q, r, c);
        blk.f.push_back(-(e_rc * p.s_f.transpose() + p.s_f * e_rc +
                          2.0 * lambda * e_rc));
      }
    }
    blk.f.push_back(p.ee_t);  // rho
    blocks.push_back(std::move(blk));
  }
  // W - (1/a2) I >= 0.
  {
    Block blk;
    blk.f.push_back(eye / options.a2);
    for (int r = 0; r < q; ++r)
      for (int c = r; c < q; ++c) blk.f.push_back(sym_basis(q, r, c));
    blk.f.push_back(Matrix::Zero(q, q));
    blocks.push_back(std::move(blk));
  }
  // (1/a1) I - W >= 0.
  {
    Block blk;
    blk.f.push_back(-eye / options.a1);
    for (int r = 0; r < q; ++r)
      for (int c = r; c < q; ++c) blk.f.push_back(-sym_basis(q, r, c));
    blk.f.push_back(Matrix::Zero(q, q));
    blocks.push_back(std::move(blk));
  }
  // eps_kill-relaxed Killing equalities, one +/- pair per point and input.
  if (killing_blocks) {
    for (const PointOps& p : ops) {
      for (int i = 0; i < sys.m; ++i) {
        for (const double sign : {-1.0, 1.0}) {
          Block blk;
          blk.f.push_back(-options.eps_kill * eye);
          for (int r = 0; r < q; ++r) {
            for (int c = r; c < q; ++c) {
              const Matrix e_rc = sym_basis(q, r, c);
              blk.f.push_back(sign * (e_rc * p.s_b[i].transpose() +
                                      p.s_b[i] * e_rc));
            }
          }
          blk.f.push_back(Matrix::Zero(q, q));
          blocks.push_back(std::move(blk));
        }
      }
    }
  }

  std::ostringstream out;
  out << "* CCM sampled feasibility export: variables are the upper triangle "
         "of W (row-wise) followed by rho\n";
  out << n_vars << "\n";
  out << blocks.size() << "\n";
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    out << q << (b + 1 < blocks.size() ? " " : "\n");
  }
  for (int k = 0; k < n_vars; ++k) out << "0" << (k + 1 < n_vars ? " " : "\n");
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (std::size_t k = 0; k < blocks[b].f.size(); ++k) {
      append_entries(out, static_cast<int>(k), static_cast<int>(b + 1),
                     blocks[b].f[k]);
    }
  }
  write_text_file(path, out.str());
}

}  // namespace ccm
