from entmeas.cli import app


def main():
    """Main entry point for the entmeas command."""
    app()


if __name__ == "__main__":
    main()
