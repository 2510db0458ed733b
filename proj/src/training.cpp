#include "lsem/training.hpp"

#include <omp.h>

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "lsem/optimizer.hpp"
#include "lsem/rng.hpp"

namespace lsem {

TrainingSimulation make_training_simulation(const SnapshotSet& snapshots,
                                            const ElementLayout& layout) {
  if (snapshots.grid.n_points != layout.grid.n_points)
    throw std::invalid_argument("make_training_simulation: grid size mismatch");
  TrainingSimulation sim;
  sim.layout = layout;
  sim.dt = snapshots.dt();
  for (int m = 0; m < layout.n_elements(); ++m)
    sim.subdomain_snapshots.push_back(restrict_rows(snapshots.values, layout, m));
  return sim;
}

Eigen::MatrixXd time_derivative(const Eigen::MatrixXd& Z, double dt) {
  const Eigen::Index n_t = Z.cols();
  if (n_t < 3) throw std::invalid_argument("time_derivative: need at least 3 columns");
  Eigen::MatrixXd zdot(Z.rows(), n_t);
  const double inv2dt = 1.0 / (2.0 * dt);
  zdot.col(0) = (-3.0 * Z.col(0) + 4.0 * Z.col(1) - Z.col(2)) * inv2dt;
  for (Eigen::Index k = 1; k + 1 < n_t; ++k)
    zdot.col(k) = (Z.col(k + 1) - Z.col(k - 1)) * inv2dt;
  zdot.col(n_t - 1) =
      (3.0 * Z.col(n_t - 1) - 4.0 * Z.col(n_t - 2) + Z.col(n_t - 3)) * inv2dt;
  return zdot;
}

namespace {

/// Adjoint of time_derivative: returns d(loss)/dZ for upstream G = d(loss)/dZdot.
Eigen::MatrixXd time_derivative_adjoint(const Eigen::MatrixXd& G, double dt) {
  const Eigen::Index n_t = G.cols();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(G.rows(), n_t);
  const double inv2dt = 1.0 / (2.0 * dt);
  out.col(0) += -3.0 * inv2dt * G.col(0);
  out.col(1) += 4.0 * inv2dt * G.col(0);
  out.col(2) += -1.0 * inv2dt * G.col(0);
  for (Eigen::Index k = 1; k + 1 < n_t; ++k) {
    out.col(k + 1) += inv2dt * G.col(k);
    out.col(k - 1) -= inv2dt * G.col(k);
  }
  out.col(n_t - 1) += 3.0 * inv2dt * G.col(n_t - 1);
  out.col(n_t - 2) += -4.0 * inv2dt * G.col(n_t - 1);
  out.col(n_t - 3) += 1.0 * inv2dt * G.col(n_t - 1);
  return out;
}

/// Stacked per-element features of a stacked latent trajectory.
Eigen::MatrixXd stacked_features(const FeatureLibrary& lib, const Eigen::MatrixXd& Z,
                                 int n_elements) {
  const int nz = lib.n_z;
  const int m = lib.m_features();
  Eigen::MatrixXd phi(n_elements * m, Z.cols());
  for (int e = 0; e < n_elements; ++e)
    phi.middleRows(e * m, m) = eval_features_batch(lib, Z.middleRows(e * nz, nz));
  return phi;
}

/// Xi * Phi with the block structure of `sys`, Phi pre-stacked.
Eigen::MatrixXd apply_blocks(const GlobalSystem& sys, const Eigen::MatrixXd& phi) {
  const int nz = sys.n_z;
  const int m = sys.library.m_features();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(sys.global_dim(), phi.cols());
  for (const auto& b : sys.blocks)
    out.middleRows(b.row * nz, nz).noalias() += b.block * phi.middleRows(b.src * m, m);
  return out;
}

void validate_set(const std::vector<ElementAutoencoder>& aes, const TrainingSet& set) {
  if (set.empty()) throw std::invalid_argument("training: empty training set");
  for (const auto& sim : set) {
    if (sim.n_times() < 3)
      throw std::invalid_argument("training: simulations need at least 3 snapshots");
    if (static_cast<int>(sim.subdomain_snapshots.size()) != sim.layout.n_elements())
      throw std::invalid_argument("training: one snapshot block per element required");
    for (int m = 0; m < sim.layout.n_elements(); ++m) {
      const int type = sim.layout.elements[m].type_id;
      if (type < 0 || type >= static_cast<int>(aes.size()))
        throw std::invalid_argument("training: element type without an autoencoder");
      if (sim.subdomain_snapshots[m].rows() != aes[type].encoder.input_size())
        throw std::invalid_argument(
            "training: element width " +
            std::to_string(sim.subdomain_snapshots[m].rows()) +
            " does not match encoder input " +
            std::to_string(aes[type].encoder.input_size()));
    }
  }
}

}  // namespace

std::vector<Eigen::MatrixXd> encode_training_set(
    const std::vector<ElementAutoencoder>& aes, const TrainingSet& set) {
  validate_set(aes, set);
  std::vector<Eigen::MatrixXd> zs(set.size());
  for (std::size_t n = 0; n < set.size(); ++n) {
    const TrainingSimulation& sim = set[n];
    const int nz = aes[0].encoder.output_size();
    Eigen::MatrixXd Z(sim.layout.n_elements() * nz, sim.n_times());
    for (int m = 0; m < sim.layout.n_elements(); ++m) {
      const int type = sim.layout.elements[m].type_id;
      Z.middleRows(m * nz, nz) = encode(aes[type].encoder, sim.subdomain_snapshots[m]);
    }
    zs[n] = std::move(Z);
  }
  return zs;
}

Eigen::VectorXd noise_std(const Eigen::MatrixXd& Z, const GlobalSystem& system,
                          double beta, double dt) {
  const Eigen::MatrixXd residual = time_derivative(Z, dt) - global_rhs_batch(system, Z);
  const double rms = std::sqrt(residual.squaredNorm() / residual.size());
  Eigen::VectorXd eps(Z.cols());
  for (Eigen::Index k = 0; k < Z.cols(); ++k) eps[k] = beta * k * rms;
  return eps;
}

NoiseDraws draw_noise(const std::vector<Eigen::MatrixXd>& Zs,
                      const std::vector<GlobalSystem>& systems,
                      const TrainingSet& set, double beta, std::uint64_t seed) {
  if (Zs.size() != set.size() || systems.size() != set.size())
    throw std::invalid_argument("draw_noise: per-simulation inputs mismatch");
  NoiseDraws noise(set.size());
  for (std::size_t n = 0; n < set.size(); ++n) {
    const int nz = systems[n].n_z;
    const Eigen::VectorXd eps = noise_std(Zs[n], systems[n], beta, set[n].dt);
    Rng rng(Rng::derive_seed(seed, n));
    noise[n].resize(set[n].layout.n_elements());
    for (int m = 0; m < set[n].layout.n_elements(); ++m) {
      Eigen::MatrixXd dz(nz, set[n].n_times());
      for (int k = 0; k < set[n].n_times(); ++k)
        for (int i = 0; i < nz; ++i) dz(i, k) = eps[k] * rng.normal();
      noise[n][m] = std::move(dz);
    }
  }
  return noise;
}

double loss_ae(const std::vector<ElementAutoencoder>& aes, const TrainingSet& set,
               const NoiseDraws& noise) {
  validate_set(aes, set);
  double total = 0.0;
  for (std::size_t n = 0; n < set.size(); ++n) {
    const TrainingSimulation& sim = set[n];
    const int nz = aes[0].encoder.output_size();
    for (int m = 0; m < sim.layout.n_elements(); ++m) {
      const int type = sim.layout.elements[m].type_id;
      const Eigen::MatrixXd Zm = encode(aes[type].encoder, sim.subdomain_snapshots[m]);
      Eigen::MatrixXd Zin = Zm;
      if (!noise.empty()) {
        if (noise[n][m].rows() != nz || noise[n][m].cols() != Zm.cols())
          throw std::invalid_argument("loss_ae: noise draw shape mismatch");
        Zin += noise[n][m];
      }
      const Eigen::MatrixXd rec = decode(aes[type].decoder, Zin);
      total += (rec - sim.subdomain_snapshots[m]).squaredNorm() /
               sim.subdomain_snapshots[m].size();
    }
  }
  return total / static_cast<double>(set.size());
}

double loss_ld(const std::vector<Eigen::MatrixXd>& Zs,
               const std::vector<GlobalSystem>& systems, const TrainingSet& set) {
  if (Zs.size() != set.size() || systems.size() != set.size())
    throw std::invalid_argument("loss_ld: per-simulation inputs mismatch");
  double total = 0.0;
  for (std::size_t n = 0; n < set.size(); ++n) {
    const Eigen::MatrixXd residual =
        time_derivative(Zs[n], set[n].dt) - global_rhs_batch(systems[n], Zs[n]);
    total += residual.squaredNorm() / residual.size();
  }
  return total / static_cast<double>(set.size());
}

double reg_eigen(const Eigen::MatrixXd& op) {
  const Eigen::VectorXcd lambda = spectrum(op);
  double j = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    const double re = lambda[i].real();
    if (re > 0.0) j += re * re;
  }
  return j;
}

double reg_eigen_with_gradient(const Eigen::MatrixXd& op, Eigen::MatrixXd& d_op) {
  d_op = Eigen::MatrixXd::Zero(op.rows(), op.cols());
  Eigen::EigenSolver<Eigen::MatrixXd> es(op, /*computeEigenvectors=*/true);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("reg_eigen: QR iteration did not converge");
  const Eigen::VectorXcd lambda = es.eigenvalues();

  double j = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    const double re = lambda[i].real();
    if (re > 0.0) j += re * re;
  }
  if (j == 0.0) return 0.0;

  const Eigen::MatrixXcd V = es.eigenvectors();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(V);
  const double cond = svd.singularValues()(0) /
                      svd.singularValues()(svd.singularValues().size() - 1);
  if (!std::isfinite(cond) || cond > 1e8) {
    // Near-defective eigenbasis: the adjoint formula is unreliable, fall
    // back to central differences on the operator entries.
    std::fprintf(stderr,
                 "reg_eigen: eigenvector condition %.2e, using finite-difference "
                 "gradient\n",
                 cond);
    const double h = 1e-6;
    Eigen::MatrixXd probe = op;
    for (Eigen::Index c = 0; c < op.cols(); ++c)
      for (Eigen::Index r = 0; r < op.rows(); ++r) {
        probe(r, c) = op(r, c) + h;
        const double jp = reg_eigen(probe);
        probe(r, c) = op(r, c) - h;
        const double jm = reg_eigen(probe);
        probe(r, c) = op(r, c);
        d_op(r, c) = (jp - jm) / (2.0 * h);
      }
    return j;
  }

  // d(lambda_i)/dA_{pq} = W_{ip} V_{qi} with W = V^{-1}; chain through
  // sum_i ReLU(Re lambda_i)^2.
  const Eigen::MatrixXcd W = V.inverse();
  Eigen::VectorXcd weight(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    weight[i] = std::complex<double>(2.0 * std::max(lambda[i].real(), 0.0), 0.0);
  d_op = (W.transpose() * weight.asDiagonal() * V.transpose()).real();
  return j;
}

double reg_energy(const std::vector<Eigen::MatrixXd>& Zs,
                  const std::vector<GlobalSystem>& systems) {
  if (Zs.size() != systems.size())
    throw std::invalid_argument("reg_energy: per-simulation inputs mismatch");
  double total = 0.0;
  for (std::size_t n = 0; n < Zs.size(); ++n) {
    const Eigen::MatrixXd rhs = global_rhs_batch(systems[n], Zs[n]);
    const Eigen::ArrayXd growth = (Zs[n].array() * rhs.array()).colwise().sum();
    total += growth.max(0.0).sum() / static_cast<double>(Zs[n].cols());
  }
  return total;
}

namespace {

struct Unit {
  int sim = 0;
  int element = 0;
};

LossBreakdown engine(const std::vector<ElementAutoencoder>& aes,
                     const InteractionDynamics& dyn, const TrainingSet& set,
                     const NoiseDraws* frozen_noise, std::uint64_t draw_seed,
                     const TrainConfig& config, ModelGradients* grads,
                     NoiseDraws* noise_out) {
  validate_set(aes, set);
  const int n_sims = static_cast<int>(set.size());
  const int nz = dyn.n_z();
  const int mf = dyn.m_features();
  if (aes[0].encoder.output_size() != nz)
    throw std::invalid_argument("training: encoder latent size differs from dynamics");

  std::vector<Unit> units;
  for (int n = 0; n < n_sims; ++n)
    for (int m = 0; m < set[n].layout.n_elements(); ++m) units.push_back({n, m});
  const int n_units = static_cast<int>(units.size());

  // Phase A: traced encodes (the traces feed the backward pass).
  std::vector<ForwardTrace> enc_traces(n_units);
  std::vector<Eigen::MatrixXd> zs(n_sims);
  {
    for (int n = 0; n < n_sims; ++n)
      zs[n] = Eigen::MatrixXd(set[n].layout.n_elements() * nz, set[n].n_times());
#pragma omp parallel for schedule(dynamic)
    for (int u = 0; u < n_units; ++u) {
      const auto [n, m] = units[u];
      const int type = set[n].layout.elements[m].type_id;
      enc_traces[u] = forward_trace(aes[type].encoder, set[n].subdomain_snapshots[m]);
    }
    int u = 0;
    for (int n = 0; n < n_sims; ++n)
      for (int m = 0; m < set[n].layout.n_elements(); ++m, ++u)
        zs[n].middleRows(m * nz, nz) = enc_traces[u].output;
  }

  // Per-simulation assembled systems (shared blocks, per-layout adjacency).
  std::vector<GlobalSystem> systems;
  systems.reserve(n_sims);
  for (int n = 0; n < n_sims; ++n)
    systems.push_back(assemble_global(dyn, adjacency_from_layout(set[n].layout)));

  // Noise: frozen draws (tests) or fresh draws from the current residual.
  NoiseDraws drawn;
  const NoiseDraws* noise = frozen_noise;
  if (noise == nullptr) {
    drawn = draw_noise(zs, systems, set, config.beta, draw_seed);
    noise = &drawn;
  }
  if (noise_out) *noise_out = *noise;

  LossBreakdown loss;

  // Phase B: latent-dynamics loss, its gradients, and the latent-space
  // upstreams that later chain into the encoders.
  std::vector<Eigen::MatrixXd> dz(n_sims);  // d(total)/dZ^(n), latent path only
  auto add_block_grad = [&](const BlockTag& tag, const Eigen::MatrixXd& g) {
    if (!grads) return;
    if (tag.internal)
      grads->d_xi_internal += g;
    else
      grads->d_xi_dir.at(tag.dir) += g;
  };

  for (int n = 0; n < n_sims; ++n) {
    const GlobalSystem& sys = systems[n];
    const Eigen::MatrixXd phi = stacked_features(dyn.library, zs[n], sys.n_elements());
    const Eigen::MatrixXd rhs = apply_blocks(sys, phi);
    const Eigen::MatrixXd residual = time_derivative(zs[n], set[n].dt) - rhs;
    loss.ld += residual.squaredNorm() / residual.size() / n_sims;

    if (grads) dz[n] = Eigen::MatrixXd::Zero(zs[n].rows(), zs[n].cols());

    if (grads && config.alpha_ld != 0.0) {
      const double scale = 2.0 * config.alpha_ld / (residual.size() * n_sims);
      const Eigen::MatrixXd G = scale * residual;
      // d/dXi at each placed position is -G_row Phi_src^T.
      for (const auto& pl : sys.placements)
        add_block_grad(pl.tag, -G.middleRows(pl.row * nz, nz) *
                                   phi.middleRows(pl.src * mf, mf).transpose());
      // dZ via the finite-difference operator.
      dz[n] += time_derivative_adjoint(G, set[n].dt);
      // dZ via the features: -Xi^T G scattered back through the library.
      Eigen::MatrixXd gphi = Eigen::MatrixXd::Zero(phi.rows(), phi.cols());
      for (const auto& b : sys.blocks)
        gphi.middleRows(b.src * mf, mf).noalias() -=
            b.block.transpose() * G.middleRows(b.row * nz, nz);
      if (dyn.library.kind == LibraryKind::linear) {
        dz[n] += gphi;
      } else {
        for (int e = 0; e < sys.n_elements(); ++e)
          for (int k = 0; k < zs[n].cols(); ++k)
            dz[n].col(k).segment(e * nz, nz) +=
                feature_jacobian(dyn.library, zs[n].col(k).segment(e * nz, nz))
                    .transpose() *
                gphi.col(k).segment(e * mf, mf);
      }
    }

    // Energy regularizer rides on the same per-simulation quantities.
    if (config.alpha_reg != 0.0 && config.reg_kind == RegKind::energy) {
      const Eigen::ArrayXd growth = (zs[n].array() * rhs.array()).colwise().sum();
      const double n_t = static_cast<double>(zs[n].cols());
      loss.reg += growth.max(0.0).sum() / n_t;
      if (grads) {
        Eigen::MatrixXd z_active = zs[n];
        for (Eigen::Index k = 0; k < zs[n].cols(); ++k)
          if (growth[k] <= 0.0) z_active.col(k).setZero();
        const double scale = config.alpha_reg / n_t;
        for (const auto& pl : sys.placements)
          add_block_grad(pl.tag,
                         scale * z_active.middleRows(pl.row * nz, nz) *
                             phi.middleRows(pl.src * mf, mf).transpose());
        // d/dz of z^T Xi Phi(z): the rhs plus the feature-Jacobian path.
        Eigen::MatrixXd dz_reg = rhs;
        for (Eigen::Index k = 0; k < zs[n].cols(); ++k)
          if (growth[k] <= 0.0) dz_reg.col(k).setZero();
        Eigen::MatrixXd gphi = Eigen::MatrixXd::Zero(phi.rows(), phi.cols());
        for (const auto& b : sys.blocks)
          gphi.middleRows(b.src * mf, mf).noalias() +=
              b.block.transpose() * z_active.middleRows(b.row * nz, nz);
        if (dyn.library.kind == LibraryKind::linear) {
          dz_reg += gphi;
        } else {
          for (int e = 0; e < sys.n_elements(); ++e)
            for (int k = 0; k < zs[n].cols(); ++k)
              dz_reg.col(k).segment(e * nz, nz) +=
                  feature_jacobian(dyn.library, zs[n].col(k).segment(e * nz, nz))
                      .transpose() *
                  gphi.col(k).segment(e * mf, mf);
        }
        dz[n] += scale * dz_reg;
      }
    }
  }

  // Eigenvalue regularizer: one dense solve per distinct adjacency size.
  if (config.alpha_reg != 0.0 && config.reg_kind == RegKind::eigen) {
    if (dyn.library.kind != LibraryKind::linear)
      throw std::invalid_argument("training: eigen regularizer needs the linear library");
    std::map<int, int> multiplicity;  // n_elements -> count
    for (int n = 0; n < n_sims; ++n) multiplicity[systems[n].n_elements()] += 1;
    for (const auto& [n_el, count] : multiplicity) {
      const GlobalSystem* sys = nullptr;
      for (int n = 0; n < n_sims; ++n)
        if (systems[n].n_elements() == n_el) {
          sys = &systems[n];
          break;
        }
      const Eigen::MatrixXd op = sys->dense();
      if (grads) {
        Eigen::MatrixXd d_op;
        const double j = reg_eigen_with_gradient(op, d_op);
        loss.reg += count * j;
        for (const auto& pl : sys->placements)
          add_block_grad(pl.tag, (config.alpha_reg * count) *
                                     d_op.block(pl.row * nz, pl.src * nz, nz, nz));
      } else {
        loss.reg += count * reg_eigen(op);
      }
    }
  }

  // Phase C: reconstruction loss; decoder and encoder backward per unit.
  std::vector<double> unit_ae(n_units, 0.0);
  std::vector<GradientTape> unit_enc_tapes, unit_dec_tapes;
  if (grads) {
    unit_enc_tapes.resize(n_units);
    unit_dec_tapes.resize(n_units);
  }
#pragma omp parallel for schedule(dynamic)
  for (int u = 0; u < n_units; ++u) {
    const auto [n, m] = units[u];
    const int type = set[n].layout.elements[m].type_id;
    const Eigen::MatrixXd& q = set[n].subdomain_snapshots[m];
    const Eigen::MatrixXd z_in = zs[n].middleRows(m * nz, nz) + (*noise)[n][m];

    if (!grads) {
      const Eigen::MatrixXd rec = decode(aes[type].decoder, z_in);
      unit_ae[u] = (rec - q).squaredNorm() / q.size();
      continue;
    }

    ForwardTrace dec_trace = forward_trace(aes[type].decoder, z_in);
    const Eigen::MatrixXd err = dec_trace.output - q;
    unit_ae[u] = err.squaredNorm() / q.size();

    unit_dec_tapes[u] = GradientTape::zeros_like(aes[type].decoder);
    const double scale = 2.0 * config.alpha_ae / (q.size() * n_sims);
    Eigen::MatrixXd up_z =
        backprop(aes[type].decoder, dec_trace, scale * err, unit_dec_tapes[u]);
    up_z += dz[n].middleRows(m * nz, nz);

    unit_enc_tapes[u] = GradientTape::zeros_like(aes[type].encoder);
    backprop(aes[type].encoder, enc_traces[u], up_z, unit_enc_tapes[u]);
  }

  for (int u = 0; u < n_units; ++u) loss.ae += unit_ae[u] / n_sims;
  if (grads) {
    // Deterministic ordered reduction, independent of thread count.
    for (int u = 0; u < n_units; ++u) {
      const int type = set[units[u].sim].layout.elements[units[u].element].type_id;
      grads->encoder_tapes[type] += unit_enc_tapes[u];
      grads->decoder_tapes[type] += unit_dec_tapes[u];
    }
  }

  loss.total = config.alpha_ae * loss.ae + config.alpha_ld * loss.ld +
               config.alpha_reg * loss.reg;
  return loss;
}

ModelGradients zero_gradients(const std::vector<ElementAutoencoder>& aes,
                              const InteractionDynamics& dyn) {
  ModelGradients g;
  for (const auto& ae : aes) {
    g.encoder_tapes.push_back(GradientTape::zeros_like(ae.encoder));
    g.decoder_tapes.push_back(GradientTape::zeros_like(ae.decoder));
  }
  g.d_xi_internal = Eigen::MatrixXd::Zero(dyn.n_z(), dyn.m_features());
  for (const auto& [d, b] : dyn.xi_dir)
    g.d_xi_dir[d] = Eigen::MatrixXd::Zero(b.rows(), b.cols());
  return g;
}

}  // namespace

LossBreakdown total_loss_and_gradients(const std::vector<ElementAutoencoder>& aes,
                                       const InteractionDynamics& dyn,
                                       const TrainingSet& set,
                                       const NoiseDraws& noise,
                                       const TrainConfig& config,
                                       ModelGradients* grads) {
  if (grads) *grads = zero_gradients(aes, dyn);
  return engine(aes, dyn, set, &noise, 0, config, grads, nullptr);
}

namespace {

/// Fixed parameter order: per type (encoder weights+biases, then decoder),
/// then xi_internal, then the directional blocks in enum order.
std::vector<ParamSlot> collect_slots(std::vector<ElementAutoencoder>& aes,
                                     InteractionDynamics& dyn) {
  std::vector<ParamSlot> slots;
  auto add_mlp = [&](MlpParams& p) {
    for (auto& w : p.weights) slots.push_back({w.data(), w.rows(), w.cols()});
    for (auto& b : p.biases) slots.push_back({b.data(), b.size(), 1});
  };
  for (auto& ae : aes) {
    add_mlp(ae.encoder);
    add_mlp(ae.decoder);
  }
  slots.push_back({dyn.xi_internal.data(), dyn.xi_internal.rows(), dyn.xi_internal.cols()});
  for (auto& [d, b] : dyn.xi_dir) slots.push_back({b.data(), b.rows(), b.cols()});
  return slots;
}

std::vector<Eigen::MatrixXd> collect_grads(const ModelGradients& g) {
  std::vector<Eigen::MatrixXd> out;
  auto add_tape = [&](const GradientTape& t) {
    for (const auto& w : t.d_weights) out.push_back(w);
    for (const auto& b : t.d_biases) out.push_back(b);
  };
  for (std::size_t i = 0; i < g.encoder_tapes.size(); ++i) {
    add_tape(g.encoder_tapes[i]);
    add_tape(g.decoder_tapes[i]);
  }
  out.push_back(g.d_xi_internal);
  for (const auto& [d, b] : g.d_xi_dir) out.push_back(b);
  return out;
}

}  // namespace

TrainResult train(const TrainingSet& set, const TrainConfig& config,
                  std::vector<ElementAutoencoder> aes, InteractionDynamics dyn,
                  const CheckpointFn& checkpoint) {
  if (config.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  validate_set(aes, set);

  std::vector<ParamSlot> slots = collect_slots(aes, dyn);
  std::unique_ptr<Optimizer> opt = config.optimizer == OptimizerKind::soap
                                       ? make_soap(config.learning_rate)
                                       : make_adam(config.learning_rate);

  TrainResult result;
  result.history.reserve(config.epochs);
  ModelGradients grads;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    grads = zero_gradients(aes, dyn);
    const LossBreakdown loss =
        engine(aes, dyn, set, nullptr, Rng::derive_seed(config.seed, epoch), config,
               &grads, nullptr);
    if (!std::isfinite(loss.total))
      throw std::runtime_error("train: non-finite loss at epoch " +
                               std::to_string(epoch));

    std::vector<Eigen::MatrixXd> flat = collect_grads(grads);
    for (const auto& g : flat)
      if (!g.allFinite())
        throw std::runtime_error("train: non-finite gradient at epoch " +
                                 std::to_string(epoch));
    opt->step(slots, flat);

    result.history.push_back(loss);
    if (checkpoint &&
        ((config.checkpoint_interval > 0 && epoch % config.checkpoint_interval == 0) ||
         epoch == config.epochs))
      checkpoint(epoch, aes, dyn, loss);
  }

  result.autoencoders = std::move(aes);
  result.dynamics = std::move(dyn);
  return result;
}

}  // namespace lsem
