fn main() {
    // Dense eigensolvers and factorizations resolve against the system
    // OpenBLAS, which bundles its LAPACK alongside the tuned kernels.
    // Declared as a link library so dependent artifacts (the CLI binary
    // and the Python extension) inherit it.
    println!("cargo:rustc-link-lib=dylib=openblas");
}
