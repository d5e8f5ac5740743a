// Placeholder while the pipeline modules land; replaced by the real CLI.
int main() { return 0; }
