fn main() {
    // Command-line front end lands with the cli module.
}
