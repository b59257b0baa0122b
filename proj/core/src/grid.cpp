#include "hjlab/grid.hpp"
#include "hjlab/error.hpp"

#include <algorithm>

namespace hjlab {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SearchWindowTooSmall: return "SearchWindowTooSmall";
    case ErrorCode::VelocityOutOfWindow: return "VelocityOutOfWindow";
    case ErrorCode::TableWindowTooSmall: return "TableWindowTooSmall";
    case ErrorCode::NonConvexBlend: return "NonConvexBlend";
    case ErrorCode::DegenerateForms: return "DegenerateForms";
    case ErrorCode::WindowExhausted: return "WindowExhausted";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::OptimizerStalled: return "OptimizerStalled";
    case ErrorCode::DualRangeExceeded: return "DualRangeExceeded";
    case ErrorCode::CorrectorMismatch: return "CorrectorMismatch";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

IndexBox intersect(const IndexBox& a, const IndexBox& b) {
  IndexBox r = a;
  for (int d = 0; d < a.dim(); ++d) {
    r.lo[d] = std::max(a.lo[d], b.lo[d]);
    r.hi[d] = std::min(a.hi[d], b.hi[d]);
  }
  return r;
}

std::vector<IVec> ball_offsets(int dim, std::int64_t r) {
  IndexBox cube{IVec(dim, -r), IVec(dim, r)};
  std::vector<IVec> out;
  IVec idx(dim);
  const auto r2 = r * r;
  for (std::int64_t f = 0; f < cube.size(); ++f) {
    cube.unflat(f, idx);
    std::int64_t s = 0;
    for (auto c : idx) s += c * c;
    if (s <= r2) out.push_back(idx);
  }
  return out;
}

}  // namespace hjlab
