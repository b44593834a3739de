#include "mmdgm/mlp.hpp"

#include <cmath>

namespace mmdgm {

Layer make_layer(Index out, Index in, Act act, RngCursor& init)
{
    Layer l;
    const double a = std::sqrt(6.0 / static_cast<double>(in + out));
    l.W.resize(out, in);
    for (Index i = 0; i < out; ++i)
        for (Index j = 0; j < in; ++j)
            l.W(i, j) = (2.0 * init.uniform() - 1.0) * a;
    l.b = Vector::Zero(out);
    l.act = act;
    return l;
}

MlpParams make_mlp(Index in, const std::vector<int>& hidden, Act act, RngCursor& init)
{
    MlpParams p;
    Index prev = in;
    for (int width : hidden) {
        p.layers.push_back(make_layer(width, prev, act, init));
        prev = width;
    }
    return p;
}

MlpParams zeros_like(const MlpParams& p)
{
    MlpParams z;
    z.layers.reserve(p.layers.size());
    for (const Layer& l : p.layers) {
        Layer zl;
        zl.W = Matrix::Zero(l.W.rows(), l.W.cols());
        zl.b = Vector::Zero(l.b.size());
        zl.act = l.act;
        z.layers.push_back(std::move(zl));
    }
    return z;
}

Matrix mlp_forward(const MlpParams& params, const Matrix& x, MlpCache* cache)
{
    if (!params.layers.empty() && x.cols() != params.in_dim())
        throw ShapeError("mlp_forward: input width " + shape_str(x) +
                         " does not match first layer " + shape_str(params.layers.front().W));

    if (cache) {
        cache->input = x;
        cache->pre.clear();
        cache->post.clear();
    }

    Matrix h = x;
    for (const Layer& l : params.layers) {
        Matrix pre = matmul(h, Matrix(l.W.transpose()));
        pre.rowwise() += l.b.transpose();
        h = activate(l.act, pre);
        if (cache) {
            cache->pre.push_back(std::move(pre));
            cache->post.push_back(h);
        }
    }
    return h;
}

Matrix mlp_backward(const MlpParams& params, const MlpCache& cache, const Matrix& grad_out,
                    MlpParams& grads, const std::vector<Matrix>* extra_post_grads)
{
    const std::size_t n_layers = params.layers.size();
    if (cache.pre.size() != n_layers || grads.layers.size() != n_layers)
        throw ParamError("mlp_backward: cache/grads do not match network layout");
    if (n_layers == 0)
        return grad_out;
    if (grad_out.rows() != cache.input.rows() || grad_out.cols() != params.out_dim())
        throw ParamError("mlp_backward: upstream gradient shape " + shape_str(grad_out) +
                         " does not match cached forward pass");

    Matrix d = grad_out;
    for (std::size_t li = n_layers; li-- > 0;) {
        const Layer& l = params.layers[li];
        if (extra_post_grads && (*extra_post_grads)[li].size() != 0)
            d += (*extra_post_grads)[li];
        const Matrix dpre = d.cwiseProduct(activate_grad(l.act, cache.pre[li]));
        const Matrix& layer_in = (li == 0) ? cache.input : cache.post[li - 1];
        grads.layers[li].W += dpre.transpose() * layer_in;
        grads.layers[li].b += dpre.colwise().sum().transpose();
        d = dpre * l.W;
    }
    return d;
}

} // namespace mmdgm
