#!/usr/bin/env python3
"""
Setup script for BasketOptimizer
Copies the template run configuration and creates the log and result directories
"""

import os
import shutil
import sys


def setup_config():
    """Copy the template run configuration if it doesn't exist"""

    config_path = "configs/run_config.json"
    template_path = "configs/run_config.template.json"

    if not os.path.exists(config_path):
        if os.path.exists(template_path):
            shutil.copy(template_path, config_path)
            print(f"✅ Created {config_path} from template")
        else:
            print(f"❌ Template file {template_path} not found")
            return False
    else:
        print(f"✅ Config file {config_path} already exists")

    for directory in ("logs", "results"):
        os.makedirs(directory, exist_ok=True)
        print(f"✅ Created {directory} directory")

    return True


def main():
    """Run setup"""
    print("🔧 BasketOptimizer Setup")
    print("=" * 50)

    if setup_config():
        print("\n🎉 Setup completed successfully!")
        print("\nNext steps:")
        print("1. Edit configs/run_config.json (command, scenario set, utility, optimizer)")
        print("2. Run: python main.py optimize --config run_config")
        print("3. Run the desk-scale protocol: python experiments/run_protocol.py desk")
    else:
        print("\n❌ Setup failed")
        sys.exit(1)


if __name__ == "__main__":
    if len(sys.argv) > 1:
        # Invoked by a build frontend (pip/setuptools): package metadata lives in pyproject.toml
        from setuptools import setup
        setup()
    else:
        main()
