//! Builds `Tr(A B)` as a tensor network, contracts it, and takes its
//! derivative with respect to `B` by deleting that node.

use so3tengen::network::ContractionOrder;
use so3tengen::network::contract_network_with;
use so3tengen::{contract_network, Bindings, NodeKind, Tensor, TensorNetwork};

fn main() -> so3tengen::Result<()> {
    let mut net = TensorNetwork::new();
    let a = net.add_node(NodeKind::Input { slot: 0, copy: 0 });
    let b = net.add_node(NodeKind::Input { slot: 1, copy: 0 });
    net.connect((a, 1), (b, 0));
    net.connect((b, 1), (a, 0));
    println!("network: {}", net.to_json()?);

    let am = Tensor::matrix3([[1.0, 2.0, 0.0], [0.0, 1.0, -1.0], [3.0, 0.0, 2.0]]);
    let bm = Tensor::matrix3([[0.5, 0.0, 1.0], [1.0, 1.0, 0.0], [0.0, 2.0, 1.0]]);
    let bind = Bindings::new().with(0, am.clone()).with(1, bm.clone());
    let greedy = contract_network(&net, &bind)?.as_scalar().unwrap();
    let random = contract_network_with(&net, &bind, ContractionOrder::Random(7))?.as_scalar().unwrap();
    println!("Tr(AB) = {greedy} (random order: {random})");

    // d Tr(AB) / dB_ij = A_ji
    let grad = contract_network(&net.remove_node(b)?, &Bindings::new().with(0, am.clone()))?;
    println!("gradient wrt B: {:?}", grad.data());
    println!("A^T:            {:?}", am.permute(&[1, 0])?.data());
    Ok(())
}
