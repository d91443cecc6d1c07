#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace dyngame {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Alpha = Eigen::Vector2d;

// Dimensions of the shipped two-player, binary-action, four-state game.
inline constexpr int kPlayers = 2;
inline constexpr int kStates = 4;
inline constexpr int kDimP = kPlayers * kStates;  // 8
inline constexpr int kDimAlpha = 2;

// Raised when inputs violate a documented precondition or a numerical
// routine cannot produce a valid result (singular system, non-convergence).
class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Index of P_j(1|x) in the player-major CCP vector. j in {1,2}, x in {1..4}.
inline int ccp_index(int j, int x) { return (j - 1) * kStates + (x - 1); }

inline Mat symmetrize(const Mat& s) { return 0.5 * (s + s.transpose()); }

}  // namespace dyngame
