// SPDX-License-Identifier: Apache-2.0

pub mod backend;
pub mod booleanifier;
pub mod codec;
pub mod frontend;
pub mod ir;
pub mod optimizer;
pub mod pipeline;
pub mod runtime;
pub mod testing;
