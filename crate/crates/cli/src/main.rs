fn main() {
    std::process::exit(axion_sim::app::main_with(std::env::args_os()));
}
