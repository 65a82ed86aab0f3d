//! Prints the trainable-parameter table for every environment.

use chebdqn::env::EnvId;
use chebdqn::harness::parameter_table;

fn main() {
    for env in EnvId::ALL {
        println!("{}", parameter_table(env));
    }
}
