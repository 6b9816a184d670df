// placeholder; filled in once the lab module lands
int main() { return 0; }
