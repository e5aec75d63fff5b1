#include "mapspan/gru.hpp"

#include "mapspan/encoder.hpp"

namespace mapspan {

void init_gru_cell(ParameterSet& params, const std::string& prefix, std::size_t hidden,
                   std::size_t input, Rng& rng) {
  for (const char* gate : {"z", "r", "h"}) {
    params.add(prefix + ".w" + gate, uniform_tensor({hidden, input}, rng));
    params.add(prefix + ".u" + gate, uniform_tensor({hidden, hidden}, rng));
    params.add(prefix + ".b" + gate, uniform_tensor({hidden}, rng));
  }
}

GruRefs gru_refs(const Bound& b, const std::string& prefix) {
  return GruRefs{b[prefix + ".wz"], b[prefix + ".uz"], b[prefix + ".bz"],
                 b[prefix + ".wr"], b[prefix + ".ur"], b[prefix + ".br"],
                 b[prefix + ".wh"], b[prefix + ".uh"], b[prefix + ".bh"]};
}

NodeId gru_step(Graph& g, const GruRefs& c, NodeId x, NodeId h_prev, NodeId ones) {
  NodeId z = g.sigmoid(g.add(g.add(g.matmul(c.wz, x), g.matmul(c.uz, h_prev)), c.bz));
  NodeId r = g.sigmoid(g.add(g.add(g.matmul(c.wr, x), g.matmul(c.ur, h_prev)), c.br));
  NodeId cand = g.tanh(g.add(g.add(g.matmul(c.wh, x), g.matmul(c.uh, g.mul(r, h_prev))), c.bh));
  return g.add(g.mul(g.sub(ones, z), h_prev), g.mul(z, cand));
}

}  // namespace mapspan
