#include "lsem/optimizer.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace lsem {

namespace {

using MapMat = Eigen::Map<Eigen::MatrixXd>;

class Adam final : public Optimizer {
 public:
  explicit Adam(double lr) : lr_(lr) {}

  void step(const std::vector<ParamSlot>& slots,
            const std::vector<Eigen::MatrixXd>& grads) override {
    if (m_.empty()) {
      for (const auto& s : slots) {
        m_.push_back(Eigen::MatrixXd::Zero(s.rows, s.cols));
        v_.push_back(Eigen::MatrixXd::Zero(s.rows, s.cols));
      }
    }
    if (slots.size() != grads.size() || slots.size() != m_.size())
      throw std::invalid_argument("Adam: slot count changed between steps");
    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, t_);
    const double bc2 = 1.0 - std::pow(kBeta2, t_);
    for (std::size_t i = 0; i < slots.size(); ++i) {
      MapMat p(slots[i].data, slots[i].rows, slots[i].cols);
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grads[i];
      v_[i].array() =
          kBeta2 * v_[i].array() + (1.0 - kBeta2) * grads[i].array().square();
      p.array() -= lr_ * (m_[i].array() / bc1) /
                   ((v_[i].array() / bc2).sqrt() + kEps);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  double lr_;
  long t_ = 0;
  std::vector<Eigen::MatrixXd> m_, v_;
};

/// SOAP (Shampoo-preconditioned Adam). Per matrix parameter it tracks the
/// gradient covariances L = EMA(G G^T), R = EMA(G^T G), refreshes their
/// eigenbases every kPrecondFreq steps, and runs Adam on the rotated
/// gradient: first moment kept in the original basis and rotated on use,
/// second moment kept in the rotated basis.
class Soap final : public Optimizer {
 public:
  explicit Soap(double lr) : lr_(lr) {}

  void step(const std::vector<ParamSlot>& slots,
            const std::vector<Eigen::MatrixXd>& grads) override {
    if (state_.empty()) {
      state_.resize(slots.size());
      for (std::size_t i = 0; i < slots.size(); ++i) {
        auto& st = state_[i];
        st.two_dim = slots[i].rows > 1 && slots[i].cols > 1;
        st.m = Eigen::MatrixXd::Zero(slots[i].rows, slots[i].cols);
        st.v = Eigen::MatrixXd::Zero(slots[i].rows, slots[i].cols);
        if (st.two_dim) {
          st.L = Eigen::MatrixXd::Zero(slots[i].rows, slots[i].rows);
          st.R = Eigen::MatrixXd::Zero(slots[i].cols, slots[i].cols);
        }
      }
    }
    if (slots.size() != grads.size() || slots.size() != state_.size())
      throw std::invalid_argument("Soap: slot count changed between steps");
    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, t_);
    const double bc2 = 1.0 - std::pow(kBeta2, t_);

    for (std::size_t i = 0; i < slots.size(); ++i) {
      MapMat p(slots[i].data, slots[i].rows, slots[i].cols);
      auto& st = state_[i];
      const Eigen::MatrixXd& g = grads[i];

      if (!st.two_dim) {
        st.m = kBeta1 * st.m + (1.0 - kBeta1) * g;
        st.v.array() = kBeta2 * st.v.array() + (1.0 - kBeta2) * g.array().square();
        p.array() -= lr_ * (st.m.array() / bc1) /
                     ((st.v.array() / bc2).sqrt() + kEps);
        continue;
      }

      st.L = kShampooBeta * st.L + (1.0 - kShampooBeta) * (g * g.transpose());
      st.R = kShampooBeta * st.R + (1.0 - kShampooBeta) * (g.transpose() * g);
      if ((t_ - 1) % kPrecondFreq == 0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> el(st.L);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> er(st.R);
        if (el.info() != Eigen::Success || er.info() != Eigen::Success)
          throw std::runtime_error("Soap: eigenbasis refresh failed");
        st.QL = el.eigenvectors();
        st.QR = er.eigenvectors();
      }

      st.m = kBeta1 * st.m + (1.0 - kBeta1) * g;
      const Eigen::MatrixXd g_rot = st.QL.transpose() * g * st.QR;
      const Eigen::MatrixXd m_rot = st.QL.transpose() * st.m * st.QR;
      st.v.array() = kBeta2 * st.v.array() + (1.0 - kBeta2) * g_rot.array().square();
      const Eigen::MatrixXd upd =
          ((m_rot.array() / bc1) / ((st.v.array() / bc2).sqrt() + kEps)).matrix();
      p.noalias() -= lr_ * st.QL * upd * st.QR.transpose();
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kShampooBeta = 0.999;
  static constexpr double kEps = 1e-8;
  static constexpr int kPrecondFreq = 10;

  struct State {
    bool two_dim = false;
    Eigen::MatrixXd m, v;      // v lives in the rotated basis
    Eigen::MatrixXd L, R, QL, QR;
  };
  double lr_;
  long t_ = 0;
  std::vector<State> state_;
};

}  // namespace

std::unique_ptr<Optimizer> make_adam(double learning_rate) {
  return std::make_unique<Adam>(learning_rate);
}

std::unique_ptr<Optimizer> make_soap(double learning_rate) {
  return std::make_unique<Soap>(learning_rate);
}

}  // namespace lsem
