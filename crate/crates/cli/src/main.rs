fn main() {
    std::process::exit(casecontrol_cli::app::main());
}
